"""Unemployment-register segmentation: collation, Kohonen maps, Ward
super-classes, multiple correspondence and canonical discriminant analysis."""

from ._core import (
    ConfigError,
    DataError,
    NumericalError,
    SegmapError,
    calibration_report,
    cda,
    generate_register,
    run_pipeline,
    sha256_hex,
    som_quality,
    som_train,
    stage_features,
    stage_ingest,
    stage_train,
    ward_labels,
    ward_tree,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericalError",
    "SegmapError",
    "calibration_report",
    "cda",
    "generate_register",
    "run_pipeline",
    "sha256_hex",
    "som_quality",
    "som_train",
    "stage_features",
    "stage_ingest",
    "stage_train",
    "ward_labels",
    "ward_tree",
]
