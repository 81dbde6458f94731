#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segmap/register.hpp"

namespace segmap {

/// Categorical block of a marginal specification: name and category labels,
/// in the order the proportions are listed.
struct MarginalBlock {
  std::string_view name;
  std::vector<std::string_view> categories;
};

/// The ten calibrated categorical blocks.
const std::vector<MarginalBlock>& marginal_blocks();

/// Mean targets. `calibrated` ones are fitted by the generator and checked by
/// validate(); the others are carried and reported only.
struct MeanTarget {
  std::string_view name;
  bool calibrated;
};
const std::vector<MeanTarget>& mean_targets();

/// Target marginals for one region.
///
/// Text form (one `key = value` per line, `#` comments):
///   region = Nord
///   population = 38068            (informational)
///   cohort_size = 10000
///   seed = 1
///   window_end = 1996-08-31
///   missing_hours_rate = 0
///   mean.<name> = <value>
///   pct.<block> = <percent> <percent> ...
struct MarginalSpec {
  Region region = Region::nord();
  long long population = 0;
  long long cohort_size = 10000;
  std::uint64_t seed = 1;
  Window window;
  double missing_hours_rate = 0.0;
  std::map<std::string, double, std::less<>> means;
  /// Proportions (not percentages), keyed by block name.
  std::map<std::string, std::vector<double>, std::less<>> proportions;

  double mean(std::string_view name) const;
  const std::vector<double>& block(std::string_view name) const;
  /// Block sums within 1 +- 0.005, sizes match, required keys present.
  void check() const;
};

MarginalSpec parse_marginal_spec(std::string_view text);
std::string write_marginal_spec(const MarginalSpec& spec);

/// Draws a synthetic register. Every individual has an independent RNG
/// stream keyed by (seed, index), so output is a pure function of the spec.
/// Throws ConfigError naming the variable when a mean target cannot be
/// reached with the bracket proportions.
std::vector<RegistrationRecord> generate(const MarginalSpec& spec);

struct CalibrationLine {
  std::string block;     ///< block name, or "mean"
  std::string category;  ///< category label or mean name
  double target = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;  ///< absolute for proportions, relative for means
  std::optional<bool> pass;  ///< empty: reported only
};

struct CalibrationReport {
  long long n = 0;
  std::vector<CalibrationLine> lines;
  std::vector<std::string> notes;

  bool all_pass() const;
  std::vector<const CalibrationLine*> flagged() const;
  std::string to_text() const;
};

/// Empirical marginals against the spec. Proportion tolerance is 1.5 points,
/// widened to three binomial standard errors for small cohorts; mean
/// tolerance is 5 % relative; either is widened to three standard errors of
/// the observed value when that is larger.
CalibrationReport validate(std::span<const Individual> individuals, const MarginalSpec& spec);
CalibrationReport validate(std::span<const RegistrationRecord> records, const MarginalSpec& spec);

}  // namespace segmap
