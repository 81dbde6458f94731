#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace segmap {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Rectangular lattice of units, indexed row-major from 0.
struct GridShape {
  int n_rows = 10;
  int n_cols = 10;

  int units() const { return n_rows * n_cols; }
  int row(int unit) const { return unit / n_cols; }
  int col(int unit) const { return unit % n_cols; }
  /// Chebyshev distance between two units on the lattice.
  int lattice_distance(int a, int b) const;
};

/// Kohonen map: one code vector per unit (rows of `codes`).
struct SomGrid {
  GridShape shape;
  Matrix codes;  ///< units() x d

  int units() const { return shape.units(); }
  int dim() const { return static_cast<int>(codes.cols()); }
};

/// Annealing schedule.
///   eps(t) = eps0 * (eps_min / eps0)^(t / T)
///   r(t)   = radius0 - floor(t * (radius0 + 1) / T)
struct TrainingSchedule {
  std::int64_t total_steps = 0;
  double eps0 = 0.5;
  double eps_min = 0.01;
  int radius0 = 4;
  std::uint64_t seed = 1;

  double epsilon(std::int64_t t) const;
  int radius(std::int64_t t) const;
  /// Throws ConfigError unless 0 < eps_min <= eps0 < 1 and radius0 >= 0.
  void validate() const;
};

/// Column means and standard deviations used to z-score the features.
struct Standardizer {
  Vector center;
  Vector scale;

  /// Population (divisor N) standard deviation; constant columns get scale 1.
  static Standardizer fit(const Matrix& data);
  Matrix apply(const Matrix& data) const;
  Matrix invert(const Matrix& standardized) const;
};

struct Assignment {
  std::vector<int> unit;
  std::vector<double> distance;
};

struct QuantizationSample {
  std::int64_t step = 0;
  double quantization_error = 0.0;
};

struct SomModel {
  SomGrid grid;
  TrainingSchedule schedule;
  Standardizer standardizer;  ///< empty when the data were not standardized
  std::vector<QuantizationSample> log;
};

struct SomQuality {
  double quantization_error = 0.0;
  double topographic_error = 0.0;
};

/// Code vectors are data rows drawn uniformly with replacement from the
/// SplitMix64 stream (seed, 0).
SomGrid som_init(GridShape shape, const Matrix& data, std::uint64_t seed);

/// Unit minimising the squared Euclidean distance; ties go to the smallest
/// index. Throws DataError on non-finite input or dimension mismatch.
int som_winner(const SomGrid& grid, std::span<const double> x);

/// Units within Chebyshev distance `radius` of `unit`, ascending.
std::vector<int> som_neighborhood(const GridShape& shape, int unit, int radius);

/// One online update: every unit of the winner's neighborhood moves by
/// eps(t) * (x - C); the others are untouched. Returns the winner.
int som_train_step(SomGrid& grid, std::span<const double> x, std::int64_t t,
                   const TrainingSchedule& schedule);

/// Same update with explicit epsilon and radius.
int som_update(SomGrid& grid, std::span<const double> x, double epsilon, int radius);

/// T presentations of rows drawn uniformly with replacement from the
/// SplitMix64 stream (seed, 1). Quantization error is logged every
/// max(1, T/20) steps and at step 0.
SomModel som_train(SomGrid grid, const Matrix& data, const TrainingSchedule& schedule);

Assignment som_classify(const SomGrid& grid, const Matrix& data);

/// Mean distance to the winner, and the share of rows whose two best units
/// are not lattice neighbours (0 for a single-unit map). Throws DataError on
/// empty data.
SomQuality som_quality(const SomGrid& grid, const Matrix& data);

/// Flat text persistence; values use 17 significant digits.
std::string write_som_model(const SomModel& model);
SomModel read_som_model(std::string_view text);

std::string write_assignment(std::span<const std::string> person_ids, const Assignment& a);
Assignment read_assignment(std::string_view text);

}  // namespace segmap
