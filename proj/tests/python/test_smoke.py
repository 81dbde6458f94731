import hashlib
import os
from pathlib import Path

import numpy as np
import pytest

import segmap

DATA = Path(os.environ.get("SEGMAP_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def nord_spec():
    return (DATA / "nord.spec").read_text()


def test_register_through_features():
    records = segmap.generate_register(nord_spec(), n=200, seed=4)
    assert records == segmap.generate_register(nord_spec(), n=200, seed=4)
    individuals = segmap.stage_ingest(records)
    features = segmap.stage_features(individuals)
    assert len(features.strip().splitlines()) == 201
    trained = segmap.stage_train(features, {"grid_rows": 3, "grid_cols": 3, "radius0": 1})
    assert set(trained) == {"model", "quality", "assignment"}


def test_calibration_report_is_text():
    spec = nord_spec()
    report = segmap.calibration_report(spec, segmap.generate_register(spec, n=500))
    assert "duration" in report


def test_som_on_two_blobs():
    rng = np.random.default_rng(0)
    data = np.vstack([rng.normal(0, 0.1, (100, 2)), rng.normal(5, 0.1, (100, 2))])
    codes = segmap.som_train(data, rows=1, cols=2, radius0=0, seed=2)
    assert codes.shape == (2, 2)
    qe, te = segmap.som_quality(codes, 1, 2, data)
    assert qe < 0.5
    assert 0.0 <= te <= 1.0


def test_ward_and_cda():
    points = np.array([[0.0], [0.1], [5.0], [5.2]])
    merges = segmap.ward_tree(points)
    assert [(a, b) for a, b, _ in merges] == [(0, 1), (2, 3), (4, 5)]
    assert merges[0][2] == pytest.approx(0.005)
    assert segmap.ward_labels(points, 2) == [1, 1, 2, 2]

    rng = np.random.default_rng(1)
    x = np.vstack([rng.normal(0, 1, (50, 3)), rng.normal(2, 1, (50, 3))])
    out = segmap.cda(x, [1] * 50 + [2] * 50)
    assert out["n_nonzero"] == 1
    assert out["eigenvalues"][0] > 1.0
    assert out["shares"][0] == pytest.approx(1.0)


def test_errors_map_to_exception_types():
    with pytest.raises(segmap.ConfigError):
        segmap.stage_train("x\n", {"no_such_key": 1})
    with pytest.raises(segmap.DataError):
        segmap.stage_ingest("person_id,region\nx,Nord\n")
    assert issubclass(segmap.NumericalError, segmap.SegmapError)


def test_sha256_and_pipeline(tmp_path):
    assert segmap.sha256_hex(b"abc") == hashlib.sha256(b"abc").hexdigest()
    files = segmap.run_pipeline({
        "synth_spec": str(DATA / "nord.spec"), "synth_n": 300, "grid_rows": 3, "grid_cols": 3,
        "radius0": 1, "k": 3, "output_dir": str(tmp_path), "standardize": True,
    })
    assert files[0][0] == "records.csv"
    for name, digest in files:
        assert hashlib.sha256((tmp_path / name).read_bytes()).hexdigest() == digest
    assert (tmp_path / "manifest.txt").exists()
