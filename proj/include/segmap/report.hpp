#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segmap/mca.hpp"
#include "segmap/register.hpp"
#include "segmap/som.hpp"
#include "segmap/superclass.hpp"

namespace segmap {

/// Everything a pipeline run depends on. Text form is `key = value` lines;
/// see config_keys() for the accepted keys.
struct PipelineConfig {
  std::string input;       ///< register CSV; exclusive with synth_spec
  std::string synth_spec;  ///< marginal spec file for a synthetic cohort
  long long synth_n = 0;   ///< 0: the spec's cohort_size
  Date window_end = Window{}.end;
  GridShape grid;
  std::int64_t steps = 0;  ///< 0: 20 presentations per individual
  double eps0 = 0.5;
  double eps_min = 0.01;
  int radius0 = 4;
  bool standardize = true;
  int k = 10;
  bool ward_size_weights = false;
  std::vector<QualVar> mca_active = {QualVar::Children, QualVar::Education, QualVar::Skill,
                                     QualVar::Reason,   QualVar::Duration,  QualVar::Exit,
                                     QualVar::Recurrence, QualVar::Hours,   QualVar::Share,
                                     QualVar::SpellsPerYear, QualVar::SuperClass};
  std::vector<QualVar> mca_supplementary = {QualVar::Age};
  int mca_axes = 5;
  double cda_ridge = 0.0;
  std::string output_dir = "segmap_out";
  std::uint64_t seed = 1;

  /// Throws ConfigError when a field is out of range. Single stages run
  /// from files pass require_input = false.
  void validate(bool require_input = true) const;
  std::int64_t total_steps(long long n_individuals) const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view help;
};
const std::vector<ConfigKey>& config_keys();

/// Sets one field from its text form. Unknown keys and bad values throw
/// ConfigError.
void apply_config_entry(PipelineConfig& config, std::string_view key, std::string_view value);
PipelineConfig parse_config(std::string_view text);
/// Canonical text form, every key in config_keys() order.
std::string write_config(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Stages. Each consumes and produces the serialized files of the bundle, so a
// stage re-run from its predecessor's files reproduces the bundle bytes.
// ---------------------------------------------------------------------------

std::string stage_ingest(std::string_view records_csv, const PipelineConfig& config);
std::string stage_features(std::string_view individuals_csv);

struct TrainOutput {
  std::string model;
  std::string quality;
  std::string assignment;
};
TrainOutput stage_train(std::string_view features_csv, const PipelineConfig& config);

struct ClusterOutput {
  std::string merge_tree;
  std::string superclasses;
  std::string connectivity;
  std::string profile;
};
ClusterOutput stage_cluster(std::string_view model, std::string_view features_csv, std::string_view assignment,
                            const PipelineConfig& config);

struct McaOutput {
  std::string eigenvalues;
  std::string coordinates;
  std::string plane_1_2;
  std::string plane_2_3;  ///< empty when fewer than three axes exist
  std::vector<std::string> warnings;
};
McaOutput stage_mca(std::string_view individuals_csv, std::string_view features_csv, std::string_view assignment,
                    std::string_view superclasses, const PipelineConfig& config);

struct CdaOutput {
  std::string eigenvalues;
  std::string coefficients;
  std::string class_means;
  std::string structure;
};
CdaOutput stage_cda(std::string_view features_csv, std::string_view assignment, std::string_view superclasses,
                    const PipelineConfig& config);

struct ReportOutput {
  std::string composition;
  std::string plate;
};
ReportOutput stage_report(std::string_view individuals_csv, std::string_view features_csv,
                          std::string_view assignment, std::string_view superclasses, std::string_view model);

// ---------------------------------------------------------------------------
// Table and figure emitters.
// ---------------------------------------------------------------------------

/// Row percentages per super-class for each qualitative block, 2 decimals,
/// "." for a zero cell and "NA" across the row of an empty super-class.
/// `labels` holds each observation's super-class (1..sc.k).
std::string emit_composition_tables(const SuperClassification& sc, std::span<const int> labels,
                                    std::span<const QualProfile> profiles);

/// Small-multiple plate: one cell per unit with a polyline through the
/// code-vector values in alphabetical variable order, scaled by the global
/// min/max of the codes; cell grey level encodes the super-class.
std::string plot_code_vectors(const SomGrid& grid, const SuperClassification& sc);

/// Scatter of category coordinates on the (axis_a, axis_b) plane, 1-based.
std::string plot_mca_plane(const McaResult& result, std::span<const SupplementaryCoordinates> sups, int axis_a,
                           int axis_b);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

struct BundleFile {
  std::string name;
  std::string sha256;
};

struct ArtifactBundle {
  std::string directory;
  std::vector<BundleFile> files;  ///< in emission order, manifest excluded
  std::vector<std::string> warnings;
};

/// Runs every stage and writes the bundle plus manifest.txt into
/// config.output_dir. On failure the files written so far are removed and
/// the error is rethrown, prefixed with the stage name, as the same type.
ArtifactBundle run_pipeline(const PipelineConfig& config);

}  // namespace segmap
