#include "segmap/som.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "segmap/error.hpp"
#include "segmap/rng.hpp"
#include "segmap/textio.hpp"

namespace segmap {

int GridShape::lattice_distance(int a, int b) const {
  return std::max(std::abs(row(a) - row(b)), std::abs(col(a) - col(b)));
}

double TrainingSchedule::epsilon(std::int64_t t) const {
  if (total_steps <= 0) return eps0;
  const double frac = static_cast<double>(t) / static_cast<double>(total_steps);
  return eps0 * std::pow(eps_min / eps0, frac);
}

int TrainingSchedule::radius(std::int64_t t) const {
  if (total_steps <= 0) return radius0;
  const std::int64_t phase = t * (radius0 + 1) / total_steps;
  return static_cast<int>(std::max<std::int64_t>(0, radius0 - phase));
}

void TrainingSchedule::validate() const {
  if (total_steps < 0) throw ConfigError("total_steps must be non-negative");
  if (!(eps_min > 0.0 && eps_min <= eps0 && eps0 < 1.0)) {
    throw ConfigError("learning rates must satisfy 0 < eps_min <= eps0 < 1");
  }
  if (radius0 < 0) throw ConfigError("radius0 must be non-negative");
}

Standardizer Standardizer::fit(const Matrix& data) {
  Standardizer s;
  const auto n = static_cast<double>(data.rows());
  s.center = data.colwise().mean().transpose();
  s.scale = Vector::Ones(data.cols());
  if (data.rows() == 0) return s;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double var = (data.col(j).array() - s.center(j)).square().sum() / n;
    if (var > 0.0) s.scale(j) = std::sqrt(var);
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& data) const {
  Matrix out = data;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j) = (out.col(j).array() - center(j)) / scale(j);
  }
  return out;
}

Matrix Standardizer::invert(const Matrix& standardized) const {
  Matrix out = standardized;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j) = out.col(j).array() * scale(j) + center(j);
  }
  return out;
}

namespace {

double squared_distance(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

void check_input(const SomGrid& grid, std::span<const double> x) {
  if (static_cast<int>(x.size()) != grid.dim()) {
    throw DataError("input dimension " + std::to_string(x.size()) + " does not match map dimension " +
                    std::to_string(grid.dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("non-finite value presented to the map");
  }
}

/// Best and second-best units (second is -1 for single-unit maps).
std::pair<int, int> best_two(const SomGrid& grid, const double* x) {
  const int d = grid.dim();
  int best = -1, second = -1;
  double best_d = std::numeric_limits<double>::infinity();
  double second_d = std::numeric_limits<double>::infinity();
  for (int u = 0; u < grid.units(); ++u) {
    const double dist = squared_distance(x, grid.codes.row(u).data(), d);
    if (best < 0 || dist < best_d) {
      second = best;
      second_d = best_d;
      best = u;
      best_d = dist;
    } else if (second < 0 || dist < second_d) {
      second = u;
      second_d = dist;
    }
  }
  return {best, second};
}

int winner_unchecked(const SomGrid& grid, const double* x) {
  const int d = grid.dim();
  int best = 0;
  double best_d = squared_distance(x, grid.codes.row(0).data(), d);
  for (int u = 1; u < grid.units(); ++u) {
    const double dist = squared_distance(x, grid.codes.row(u).data(), d);
    if (dist < best_d) {
      best_d = dist;
      best = u;
    }
  }
  return best;
}

void update_unchecked(SomGrid& grid, const double* x, int winner, double epsilon, int radius) {
  const int d = grid.dim();
  const auto& s = grid.shape;
  const int r0 = std::max(0, s.row(winner) - radius), r1 = std::min(s.n_rows - 1, s.row(winner) + radius);
  const int c0 = std::max(0, s.col(winner) - radius), c1 = std::min(s.n_cols - 1, s.col(winner) + radius);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      double* code = grid.codes.row(r * s.n_cols + c).data();
      for (int j = 0; j < d; ++j) code[j] = code[j] + epsilon * (x[j] - code[j]);
    }
  }
}

double mean_winner_distance(const SomGrid& grid, const Matrix& data) {
  if (data.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int w = winner_unchecked(grid, data.row(i).data());
    total += std::sqrt(squared_distance(data.row(i).data(), grid.codes.row(w).data(), grid.dim()));
  }
  return total / static_cast<double>(data.rows());
}

}  // namespace

SomGrid som_init(GridShape shape, const Matrix& data, std::uint64_t seed) {
  if (shape.n_rows < 1 || shape.n_cols < 1) throw ConfigError("grid shape must be at least 1x1");
  if (data.rows() == 0 || data.cols() == 0) throw DataError("cannot initialise a map from empty data");
  SomGrid grid{shape, Matrix(shape.units(), data.cols())};
  auto rng = SplitMix64::stream(seed, 0);
  for (int u = 0; u < shape.units(); ++u) {
    grid.codes.row(u) = data.row(static_cast<Eigen::Index>(rng.bounded(data.rows())));
  }
  return grid;
}

int som_winner(const SomGrid& grid, std::span<const double> x) {
  check_input(grid, x);
  return winner_unchecked(grid, x.data());
}

std::vector<int> som_neighborhood(const GridShape& shape, int unit, int radius) {
  std::vector<int> out;
  for (int u = 0; u < shape.units(); ++u) {
    if (shape.lattice_distance(unit, u) <= radius) out.push_back(u);
  }
  return out;
}

int som_update(SomGrid& grid, std::span<const double> x, double epsilon, int radius) {
  check_input(grid, x);
  const int w = winner_unchecked(grid, x.data());
  update_unchecked(grid, x.data(), w, epsilon, radius);
  return w;
}

int som_train_step(SomGrid& grid, std::span<const double> x, std::int64_t t,
                   const TrainingSchedule& schedule) {
  return som_update(grid, x, schedule.epsilon(t), schedule.radius(t));
}

SomModel som_train(SomGrid grid, const Matrix& data, const TrainingSchedule& schedule) {
  schedule.validate();
  if (data.cols() != grid.dim()) throw DataError("training data dimension does not match the map");
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (!data.row(i).allFinite()) throw DataError("non-finite value in training data");
  }
  SomModel model{std::move(grid), schedule, {}, {}};
  const std::int64_t T = schedule.total_steps;
  if (T == 0 || data.rows() == 0) return model;

  const std::int64_t every = std::max<std::int64_t>(1, T / 20);
  auto rng = SplitMix64::stream(schedule.seed, 1);
  model.log.push_back({0, mean_winner_distance(model.grid, data)});
  for (std::int64_t t = 0; t < T; ++t) {
    const double* x = data.row(static_cast<Eigen::Index>(rng.bounded(data.rows()))).data();
    const int w = winner_unchecked(model.grid, x);
    update_unchecked(model.grid, x, w, schedule.epsilon(t), schedule.radius(t));
    if ((t + 1) % every == 0 || t + 1 == T) {
      if (model.log.back().step != t + 1) {
        model.log.push_back({t + 1, mean_winner_distance(model.grid, data)});
      }
    }
  }
  return model;
}

Assignment som_classify(const SomGrid& grid, const Matrix& data) {
  if (data.rows() > 0 && data.cols() != grid.dim()) {
    throw DataError("classification data dimension does not match the map");
  }
  Assignment a;
  a.unit.resize(static_cast<std::size_t>(data.rows()));
  a.distance.resize(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int w = winner_unchecked(grid, data.row(i).data());
    a.unit[static_cast<std::size_t>(i)] = w;
    a.distance[static_cast<std::size_t>(i)] =
        std::sqrt(squared_distance(data.row(i).data(), grid.codes.row(w).data(), grid.dim()));
  }
  return a;
}

SomQuality som_quality(const SomGrid& grid, const Matrix& data) {
  if (data.rows() == 0) throw DataError("quality requires at least one observation");
  if (data.cols() != grid.dim()) throw DataError("quality data dimension does not match the map");
  SomQuality q;
  std::int64_t topo_errors = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto [best, second] = best_two(grid, data.row(i).data());
    q.quantization_error +=
        std::sqrt(squared_distance(data.row(i).data(), grid.codes.row(best).data(), grid.dim()));
    if (second >= 0 && grid.shape.lattice_distance(best, second) != 1) ++topo_errors;
  }
  const auto n = static_cast<double>(data.rows());
  q.quantization_error /= n;
  q.topographic_error = static_cast<double>(topo_errors) / n;
  return q;
}

// ---------------------------------------------------------------------------

std::string write_som_model(const SomModel& model) {
  std::ostringstream os;
  const auto& g = model.grid;
  const auto& s = model.schedule;
  os << "segmap-som 1\n";
  os << "n_rows " << g.shape.n_rows << "\nn_cols " << g.shape.n_cols << "\ndim " << g.dim() << '\n';
  os << "seed " << s.seed << "\ntotal_steps " << s.total_steps << "\neps0 " << textio::exact(s.eps0)
     << "\neps_min " << textio::exact(s.eps_min) << "\nradius0 " << s.radius0 << '\n';
  const bool standardized = model.standardizer.center.size() == g.dim();
  os << "standardized " << (standardized ? 1 : 0) << '\n';
  if (standardized) {
    os << "center";
    for (Eigen::Index j = 0; j < g.dim(); ++j) os << ' ' << textio::exact(model.standardizer.center(j));
    os << "\nscale";
    for (Eigen::Index j = 0; j < g.dim(); ++j) os << ' ' << textio::exact(model.standardizer.scale(j));
    os << '\n';
  }
  os << "codes\n";
  for (int u = 0; u < g.units(); ++u) {
    for (int j = 0; j < g.dim(); ++j) os << (j ? " " : "") << textio::exact(g.codes(u, j));
    os << '\n';
  }
  return os.str();
}

SomModel read_som_model(std::string_view text) {
  const auto rows = textio::lines(text);
  std::size_t li = 0;
  auto next_fields = [&](std::string_view key) {
    if (li >= rows.size()) throw DataError("model file truncated before '" + std::string(key) + "'");
    auto f = textio::split(rows[li++], ' ');
    if (f.empty() || f[0] != key) {
      throw DataError("model file: expected '" + std::string(key) + "' on line " + std::to_string(li));
    }
    return f;
  };
  auto scalar = [&](std::string_view key) {
    auto f = next_fields(key);
    if (f.size() != 2) throw DataError("model file: malformed '" + std::string(key) + "'");
    return f[1];
  };
  if (li >= rows.size() || rows[li++] != "segmap-som 1") throw DataError("not a segmap SOM model file");
  SomModel m;
  m.grid.shape.n_rows = static_cast<int>(textio::parse_int(scalar("n_rows"), "n_rows"));
  m.grid.shape.n_cols = static_cast<int>(textio::parse_int(scalar("n_cols"), "n_cols"));
  const auto d = textio::parse_int(scalar("dim"), "dim");
  m.schedule.seed = std::stoull(scalar("seed"));
  m.schedule.total_steps = textio::parse_int(scalar("total_steps"), "total_steps");
  m.schedule.eps0 = textio::parse_double(scalar("eps0"), "eps0");
  m.schedule.eps_min = textio::parse_double(scalar("eps_min"), "eps_min");
  m.schedule.radius0 = static_cast<int>(textio::parse_int(scalar("radius0"), "radius0"));
  if (m.grid.shape.n_rows < 1 || m.grid.shape.n_cols < 1 || d < 1) {
    throw DataError("model file: invalid grid shape or dimension");
  }
  if (textio::parse_int(scalar("standardized"), "standardized") != 0) {
    auto read_vec = [&](std::string_view key) {
      auto f = next_fields(key);
      if (static_cast<long long>(f.size()) != d + 1) throw DataError("model file: malformed " + std::string(key));
      Vector v(d);
      for (long long j = 0; j < d; ++j) v(j) = textio::parse_double(f[j + 1], key);
      return v;
    };
    m.standardizer.center = read_vec("center");
    m.standardizer.scale = read_vec("scale");
  }
  next_fields("codes");
  m.grid.codes.resize(m.grid.shape.units(), d);
  for (int u = 0; u < m.grid.units(); ++u) {
    if (li >= rows.size()) throw DataError("model file: missing code vectors");
    const auto f = textio::split(rows[li++], ' ');
    if (static_cast<long long>(f.size()) != d) throw DataError("model file: code vector of wrong length");
    for (long long j = 0; j < d; ++j) m.grid.codes(u, j) = textio::parse_double(f[j], "code value");
  }
  return m;
}

std::string write_assignment(std::span<const std::string> person_ids, const Assignment& a) {
  std::ostringstream os;
  os << "person_id,unit,distance\n";
  for (std::size_t i = 0; i < a.unit.size(); ++i) {
    os << person_ids[i] << ',' << a.unit[i] << ',' << textio::exact(a.distance[i]) << '\n';
  }
  return os.str();
}

Assignment read_assignment(std::string_view text) {
  const auto rows = textio::lines(text);
  if (rows.empty() || rows[0] != "person_id,unit,distance") throw DataError("not an assignment file");
  Assignment a;
  for (std::size_t li = 1; li < rows.size(); ++li) {
    if (rows[li].empty()) continue;
    const auto f = textio::split(rows[li]);
    if (f.size() != 3) throw DataError("assignment file: wrong field count on line " + std::to_string(li + 1));
    a.unit.push_back(static_cast<int>(textio::parse_int(f[1], "unit")));
    a.distance.push_back(textio::parse_double(f[2], "distance"));
  }
  return a;
}

}  // namespace segmap
