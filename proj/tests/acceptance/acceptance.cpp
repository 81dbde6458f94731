// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "segmap/cda.hpp"
#include "segmap/error.hpp"
#include "segmap/mca.hpp"
#include "segmap/report.hpp"
#include "segmap/rng.hpp"
#include "segmap/som.hpp"
#include "segmap/superclass.hpp"
#include "segmap/synth.hpp"
#include "segmap/textio.hpp"

using namespace segmap;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
}

MarginalSpec load_spec(const std::string& name, long long n, std::uint64_t seed) {
  auto spec = parse_marginal_spec(textio::read_file(std::string(SEGMAP_DATA_DIR) + "/" + name));
  spec.cohort_size = n;
  spec.seed = seed;
  return spec;
}

/// Nord cohort at desk scale with its standardized feature matrix.
struct Cohort {
  std::vector<Individual> individuals;
  Matrix raw;
  Matrix standardized;
};

Cohort nord_cohort(std::uint64_t seed) {
  const auto spec = load_spec("nord.spec", 10000, seed);
  Cohort c;
  c.individuals = ingest(generate(spec), spec.window).individuals;
  c.raw.resize(static_cast<Eigen::Index>(c.individuals.size()), kFeatureCount);
  for (std::size_t i = 0; i < c.individuals.size(); ++i) {
    const auto f = build_features(c.individuals[i]);
    for (std::size_t j = 0; j < kFeatureCount; ++j) c.raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.values[j];
  }
  c.standardized = Standardizer::fit(c.raw).apply(c.raw);
  return c;
}

TrainingSchedule desk_schedule(std::int64_t n, std::uint64_t seed) {
  TrainingSchedule s;
  s.total_steps = 20 * n;
  s.seed = seed;
  return s;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Shared by criteria 5 to 7: the seed-1 desk map and its classification.
struct DeskRun {
  Cohort cohort;
  SomGrid grid;
  Assignment assignment;
  SuperClassification sc;
  std::vector<int> labels;
};

DeskRun desk_run() {
  DeskRun r;
  r.cohort = nord_cohort(1);
  const auto model = som_train(som_init({10, 10}, r.cohort.standardized, 1), r.cohort.standardized,
                               desk_schedule(r.cohort.standardized.rows(), 1));
  r.grid = model.grid;
  r.assignment = som_classify(r.grid, r.cohort.standardized);
  r.sc = cut(ward_tree(r.grid.codes), 10);
  r.labels = observation_labels(r.sc, r.assignment);
  return r;
}

}  // namespace

int main() {
  report(1, "radius-0 constant-gain training equals online k-means", [] {
    const auto t0 = Clock::now();
    auto rng = SplitMix64::stream(2024, 0);
    Matrix data(500, 11);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      for (Eigen::Index j = 0; j < 11; ++j) data(i, j) = rng.uniform() * (1.0 + static_cast<double>(j));
    int identical = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      TrainingSchedule s;
      s.total_steps = 20 * data.rows();
      s.eps0 = s.eps_min = 0.05;
      s.radius0 = 0;
      s.seed = seed;
      const auto model = som_train(som_init({10, 10}, data, seed), data, s);
      const auto ref = oracle::online_kmeans(data, 100, 0.05, s.total_steps, seed);
      if ((model.grid.codes.array() == ref.array()).all()) ++identical;
    }
    const double secs = seconds_since(t0);
    return Outcome{identical == 5 && secs < 5.0,
                   std::to_string(identical) + "/5 seeds bit-identical, " + fmt("%.2f s", secs)};
  });

  report(2, "update rule matches the closed form", [] {
    auto rng = SplitMix64::stream(77, 0);
    int bad_neighbour = 0, bad_other = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int rows = 1 + static_cast<int>(rng.bounded(8));
      const int cols = 1 + static_cast<int>(rng.bounded(8));
      const int d = 1 + static_cast<int>(rng.bounded(11));
      SomGrid grid{{rows, cols}, Matrix(rows * cols, d)};
      for (Eigen::Index i = 0; i < grid.codes.size(); ++i) grid.codes.data()[i] = 10.0 * rng.uniform() - 5.0;
      std::vector<double> x(static_cast<std::size_t>(d));
      for (auto& v : x) v = 10.0 * rng.uniform() - 5.0;
      TrainingSchedule s;
      s.total_steps = 1 + static_cast<std::int64_t>(rng.bounded(100000));
      s.eps0 = 0.05 + 0.9 * rng.uniform();
      s.eps_min = s.eps0 * (0.001 + 0.999 * rng.uniform());
      s.radius0 = static_cast<int>(rng.bounded(6));
      const auto t = static_cast<std::int64_t>(rng.bounded(static_cast<std::uint64_t>(s.total_steps)));
      const SomGrid before = grid;
      const int w = som_train_step(grid, x, t, s);
      const double eps = s.epsilon(t);
      const int r = s.radius(t);
      for (int u = 0; u < grid.units(); ++u) {
        for (int j = 0; j < d; ++j) {
          if (grid.shape.lattice_distance(u, w) <= r) {
            const double err = std::abs(grid.codes(u, j) - ((1.0 - eps) * before.codes(u, j) + eps * x[j]));
            worst = std::max(worst, err);
            if (err > 1e-12) ++bad_neighbour;
          } else if (grid.codes(u, j) != before.codes(u, j)) {
            ++bad_other;
          }
        }
      }
    }
    return Outcome{bad_neighbour == 0 && bad_other == 0,
                   "1000 cases, max neighbour error " + fmt("%.2e", worst) + ", non-neighbour changes " +
                       std::to_string(bad_other)};
  });

  report(3, "topology preservation at desk scale", [] {
    const auto t0 = Clock::now();
    double te = 0.0, ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto c = nord_cohort(seed);
      const auto init = som_init({10, 10}, c.standardized, seed);
      const double q0 = som_quality(init, c.standardized).quantization_error;
      const auto model = som_train(init, c.standardized, desk_schedule(c.standardized.rows(), seed));
      const auto q = som_quality(model.grid, c.standardized);
      te += q.topographic_error;
      ratio += q.quantization_error / q0;
    }
    te /= 10.0;
    ratio /= 10.0;
    const double secs = seconds_since(t0);
    return Outcome{te <= 0.35 && ratio <= 0.75 && secs < 60.0,
                   "mean topographic error " + fmt("%.4f", te) + ", mean QE ratio " + fmt("%.4f", ratio) + ", " +
                       fmt("%.1f s", secs)};
  });

  report(4, "Ward tree matches the brute-force oracle", [] {
    auto rng = SplitMix64::stream(4, 0);
    int mismatched = 0, non_monotone = 0;
    for (int set = 0; set < 200; ++set) {
      const int p = 2 + static_cast<int>(rng.bounded(5));
      const int d = 1 + static_cast<int>(rng.bounded(4));
      Matrix pts(p, d);
      for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = 20.0 * rng.uniform() - 10.0;
      const auto tree = ward_tree(pts);
      const auto ref = oracle::brute_ward(pts);
      bool same = tree.merges.size() == ref.size();
      for (std::size_t m = 0; same && m < ref.size(); ++m) {
        same = tree.merges[m].left == ref[m].left && tree.merges[m].right == ref[m].right &&
               tree.merges[m].new_cluster == ref[m].created &&
               std::abs(tree.merges[m].height - ref[m].height) <= 1e-9 * std::max(1.0, ref[m].height);
        if (m > 0 && tree.merges[m].height < tree.merges[m - 1].height) ++non_monotone;
      }
      mismatched += !same;
    }
    return Outcome{mismatched == 0 && non_monotone == 0,
                   "200 sets, " + std::to_string(mismatched) + " mismatched trees, " + std::to_string(non_monotone) +
                       " height decreases"};
  });

  const DeskRun desk = desk_run();

  report(5, "two-level classification at k=10", [&] {
    std::vector<long long> sizes(10, 0);
    for (int l : desk.labels) ++sizes[static_cast<std::size_t>(l - 1)];
    int non_empty = 0;
    for (auto s : sizes) non_empty += s > 0;
    const auto conn = connectivity_report(desk.sc, desk.grid.shape);
    int split = 0;
    for (const auto& c : conn) split += c.n_components() > 1;
    const bool ok = non_empty == 10 && conn.size() == 10 && !write_connectivity(conn).empty();
    return Outcome{ok, std::to_string(non_empty) + " non-empty super-classes, " + std::to_string(split) +
                           " split across the map"};
  });

  report(6, "MCA agrees with the indicator-matrix oracle", [&] {
    std::vector<QualProfile> profiles;
    for (std::size_t i = 0; i < desk.cohort.individuals.size(); ++i) {
      const auto f = build_features(desk.cohort.individuals[i]);
      profiles.push_back(bracketize(desk.cohort.individuals[i], f, desk.labels[i]));
    }
    const PipelineConfig defaults;
    const auto z = build_indicator(profiles, defaults.mca_active);
    const auto res = correspondence(burt(z));
    const auto ref = oracle::indicator_ca(z.z);
    const auto q = static_cast<double>(z.n_variables());

    double eig_err = 0.0;
    const bool same_rank = ref.inertias.size() == res.n_axes();
    for (int a = 0; a < std::min<int>(res.n_axes(), static_cast<int>(ref.inertias.size())); ++a) {
      eig_err = std::max(eig_err, std::abs(res.burt_inertias()(a) - ref.inertias(a) * ref.inertias(a)));
    }

    const int axes = std::min(5, res.n_axes());
    double centroid_err = 0.0;
    for (int a = 0; a < axes; ++a) {
      const double sigma = std::sqrt(res.eigenvalues(a));
      const Eigen::VectorXd row_std = z.z * res.standard_coordinates.col(a) / (q * sigma);
      for (Eigen::Index j = 0; j < z.z.cols(); ++j) {
        const double centroid = z.z.col(j).dot(row_std) / z.z.col(j).sum();
        centroid_err = std::max(centroid_err, std::abs(centroid - res.principal_coordinates(j, a)));
      }
    }

    std::vector<std::string> labels;
    const auto counts = supplementary_counts(profiles, z, QualVar::Age, labels);
    const auto sup = project_supplementary(res, counts, labels);
    double sup_err = 0.0;
    for (int a = 0; a < axes; ++a) {
      Eigen::VectorXd rows = ref.row_standard.col(a);
      if (ref.col_standard.col(a).dot(res.standard_coordinates.col(a)) < 0) rows = -rows;
      for (std::size_t s = 0; s < labels.size(); ++s) {
        if (!sup.principal[s]) continue;
        double sum = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < profiles.size(); ++i) {
          if (profiles[i][QualVar::Age] != labels[s]) continue;
          sum += rows(static_cast<Eigen::Index>(i));
          ++n;
        }
        sup_err = std::max(sup_err, std::abs((*sup.principal[s])(a) - sum / n));
      }
    }
    const bool ok = same_rank && eig_err <= 1e-8 && centroid_err <= 1e-10 && sup_err <= 1e-8;
    return Outcome{ok, "J = " + std::to_string(z.z.cols()) + ", eigenvalue error " + fmt("%.2e", eig_err) +
                           ", centroid error " + fmt("%.2e", centroid_err) + ", supplementary error " +
                           fmt("%.2e", sup_err)};
  });

  report(7, "CDA invariance under affine maps", [&] {
    const auto before = canonical(scatter(desk.cohort.raw, desk.labels));
    auto rng = SplitMix64::stream(7, 0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(11, 11);
    for (int i = 0; i < 11; ++i)
      for (int j = 0; j < 11; ++j) a(i, j) += 0.5 * (rng.uniform() - 0.5);
    Eigen::RowVectorXd shift(11);
    for (int j = 0; j < 11; ++j) shift(j) = 100.0 * (rng.uniform() - 0.5);
    const Matrix moved = (desk.cohort.raw * a).rowwise() + shift;
    const auto after = canonical(scatter(moved, desk.labels));
    const double diff = (before.eigenvalues - after.eigenvalues).cwiseAbs().maxCoeff();
    bool descending = true;
    for (Eigen::Index k = 1; k < before.shares.size(); ++k) descending = descending && before.shares(k) <= before.shares(k - 1);
    const double sum_err = std::abs(before.shares.sum() - 1.0);
    const bool ok = diff <= 1e-8 && before.n_nonzero <= 9 && descending && sum_err <= 1e-10;
    return Outcome{ok, "max eigenvalue change " + fmt("%.2e", diff) + " (largest " +
                           fmt("%.4g", before.eigenvalues(0)) + "), nonzero " + std::to_string(before.n_nonzero) +
                           ", share sum error " + fmt("%.1e", sum_err)};
  });

  report(8, "synthetic calibration at N=10,000", [] {
    std::string detail;
    bool ok = true;
    for (const char* name : {"nord.spec", "rhone.spec"}) {
      const auto spec = load_spec(name, 10000, 1);
      const auto rep = validate(generate(spec), spec);
      double worst_pp = 0.0, worst_rel = 0.0;
      int misses = 0;
      for (const auto& l : rep.lines) {
        if (l.block != "mean") {
          const double pp = 100.0 * std::abs(l.observed - l.target);
          worst_pp = std::max(worst_pp, pp);
          misses += pp > 1.5 + 1e-9;
        } else if (l.pass.has_value()) {
          const double rel = std::abs(l.observed - l.target) / l.target;
          worst_rel = std::max(worst_rel, rel);
          misses += rel > 0.05;
        }
      }
      ok = ok && misses == 0;
      detail += std::string(detail.empty() ? "" : "; ") + to_string(spec.region) + ": worst " + fmt("%.2f pp", worst_pp) +
                ", worst mean " + fmt("%.1f%%", 100.0 * worst_rel);
    }
    return Outcome{ok, detail};
  });

  report(9, "pipeline determinism", [] {
    const auto base = fs::temp_directory_path() / "segmap_acceptance_determinism";
    fs::remove_all(base);
    PipelineConfig c;
    c.synth_spec = std::string(SEGMAP_DATA_DIR) + "/nord.spec";
    c.seed = 1;
    c.output_dir = (base / "a").string();
    const auto a = run_pipeline(c);
    c.output_dir = (base / "b").string();
    const auto b = run_pipeline(c);
    int differing = 0;
    std::vector<std::string> names{"manifest.txt"};
    for (const auto& f : a.files) names.push_back(f.name);
    for (const auto& n : names) {
      differing += textio::read_file((base / "a" / n).string()) != textio::read_file((base / "b" / n).string());
    }
    const bool same_list = a.files.size() == b.files.size();
    fs::remove_all(base);
    return Outcome{differing == 0 && same_list,
                   std::to_string(names.size()) + " files compared, " + std::to_string(differing) + " differ"};
  });

  report(10, "collation arithmetic on a 2,000-person fixture", [] {
    const auto plan = oracle::collation_plan(2000);
    const auto res = ingest(oracle::plan_records(plan), oracle::fixture_window());
    if (res.individuals.size() != plan.size()) return Outcome{false, "wrong number of individuals"};
    long long singles_expected = 0, singles = 0, mismatches = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      singles_expected += plan[i].spells.size() == 1;
      singles += res.individuals[i].n_periods == 1;
      if (res.individuals[i].person_id != plan[i].id) return Outcome{false, "person order differs"};
      const auto got = build_features(res.individuals[i]).values;
      const auto want = oracle::planned_features(plan[i]);
      for (std::size_t f = 0; f < kFeatureCount; ++f) mismatches += got[f] != want[f];
    }
    return Outcome{singles == singles_expected && mismatches == 0,
                   "single-registration fraction " + fmt("%.4f", static_cast<double>(singles) / 2000.0) +
                       " (expected " + fmt("%.4f", static_cast<double>(singles_expected) / 2000.0) + "), " +
                       std::to_string(mismatches) + " of 22000 feature values differ"};
  });

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
