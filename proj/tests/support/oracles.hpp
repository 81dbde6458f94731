// Reference implementations used by the tests. Each one is written from the
// textbook definition and shares no code with the library beyond its types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "segmap/register.hpp"

namespace oracle {

/// SplitMix64 written out again so the k-means oracle does not depend on the
/// library's generator.
struct Mix64 {
  std::uint64_t s;

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static Mix64 stream(std::uint64_t seed, std::uint64_t counter) {
    return {finalize(seed ^ finalize(counter + 0x9E3779B97F4A7C15ULL))};
  }
  std::uint64_t next() {
    s += 0x9E3779B97F4A7C15ULL;
    return finalize(s);
  }
  // Lemire: multiply, reject the biased low residues.
  std::uint64_t below(std::uint64_t n) {
    for (;;) {
      const unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= n || low >= (0 - n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Online k-means (MacQueen/Forgy with a constant gain): centres start at
/// sampled rows, each presented row pulls only its nearest centre.
inline RowMatrix online_kmeans(const RowMatrix& data, int k, double gain, std::int64_t steps,
                               std::uint64_t seed) {
  const auto n = static_cast<std::uint64_t>(data.rows());
  const auto d = data.cols();
  std::vector<std::vector<double>> centre(k, std::vector<double>(d));
  auto init = Mix64::stream(seed, 0);
  for (int c = 0; c < k; ++c) {
    const auto row = init.below(n);
    for (Eigen::Index j = 0; j < d; ++j) centre[c][j] = data(row, j);
  }
  auto draw = Mix64::stream(seed, 1);
  for (std::int64_t t = 0; t < steps; ++t) {
    const auto row = draw.below(n);
    int best = -1;
    double best_d = 0.0;
    for (int c = 0; c < k; ++c) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = data(row, j) - centre[c][j];
        s += diff * diff;
      }
      if (best < 0 || s < best_d) {
        best = c;
        best_d = s;
      }
    }
    for (Eigen::Index j = 0; j < d; ++j) centre[best][j] += gain * (data(row, j) - centre[best][j]);
  }
  RowMatrix out(k, d);
  for (int c = 0; c < k; ++c)
    for (Eigen::Index j = 0; j < d; ++j) out(c, j) = centre[c][j];
  return out;
}

struct BruteMerge {
  int left, right, created;
  double height;
};

/// Ward agglomeration recomputing every pairwise cost from the cluster
/// members at every step. Cost of merging A and B is the growth of the
/// within-cluster sum of squares.
inline std::vector<BruteMerge> brute_ward(const RowMatrix& points) {
  const int p = static_cast<int>(points.rows());
  struct Cluster {
    int id;
    std::vector<int> members;
  };
  std::vector<Cluster> live;
  for (int i = 0; i < p; ++i) live.push_back({i, {i}});

  auto sse = [&](const std::vector<int>& m) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(points.cols());
    for (int i : m) mean += points.row(i);
    mean /= static_cast<double>(m.size());
    double s = 0.0;
    for (int i : m) s += (points.row(i) - mean).squaredNorm();
    return s;
  };

  std::vector<BruteMerge> out;
  for (int step = 0; step < p - 1; ++step) {
    std::size_t ba = 0, bb = 0;
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> best_key{std::numeric_limits<int>::max(), 0};
    for (std::size_t a = 0; a < live.size(); ++a) {
      for (std::size_t b = a + 1; b < live.size(); ++b) {
        std::vector<int> both = live[a].members;
        both.insert(both.end(), live[b].members.begin(), live[b].members.end());
        const double cost = sse(both) - sse(live[a].members) - sse(live[b].members);
        const std::pair<int, int> key = std::minmax(live[a].id, live[b].id);
        if (cost < best || (cost == best && key < best_key)) {
          best = cost;
          best_key = key;
          ba = a;
          bb = b;
        }
      }
    }
    Cluster merged{p + step, live[ba].members};
    merged.members.insert(merged.members.end(), live[bb].members.begin(), live[bb].members.end());
    out.push_back({best_key.first, best_key.second, p + step, best});
    live.erase(live.begin() + static_cast<long>(bb));
    live.erase(live.begin() + static_cast<long>(ba));
    live.push_back(std::move(merged));
  }
  return out;
}

/// Correspondence analysis of an indicator matrix by SVD of the standardized
/// residuals. Row standard coordinates are returned for the transition checks.
struct IndicatorCa {
  Eigen::VectorXd inertias;       ///< singular values squared, descending
  Eigen::MatrixXd row_standard;   ///< N x A
  Eigen::MatrixXd col_standard;   ///< J x A
};

inline IndicatorCa indicator_ca(const Eigen::MatrixXd& z) {
  const double total = z.sum();
  const Eigen::MatrixXd p = z / total;
  const Eigen::VectorXd r = p.rowwise().sum();
  const Eigen::VectorXd c = p.colwise().sum().transpose();
  const Eigen::MatrixXd s = r.cwiseSqrt().cwiseInverse().asDiagonal() * (p - r * c.transpose()) *
                            c.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  int a = 0;
  while (a < sv.size() && sv(a) > 1e-7 * sv(0)) ++a;
  IndicatorCa out;
  out.inertias = sv.head(a).array().square();
  out.row_standard = r.cwiseSqrt().cwiseInverse().asDiagonal() * svd.matrixU().leftCols(a);
  out.col_standard = c.cwiseSqrt().cwiseInverse().asDiagonal() * svd.matrixV().leftCols(a);
  return out;
}

// ---------------------------------------------------------------------------
// Collation fixture: persons whose registration history is generated from a
// handful of integers, so every collated quantity has a closed form.
// ---------------------------------------------------------------------------

struct PlannedSpell {
  int entry_offset;  ///< days after the fixture origin
  int length;        ///< days; exit = entry + length
  bool open;         ///< no exit date; length runs to the window end
  std::vector<std::pair<double, double>> months;  ///< (hours, wage)
  std::vector<int> spell_of_month;
  int offers;
};

struct PlannedPerson {
  std::string id;
  std::vector<PlannedSpell> spells;  ///< chronological
  double age, seniority;
  int children;
};

inline segmap::Date fixture_origin() { return segmap::Date::from_ymd(1991, 6, 1); }
inline segmap::Window fixture_window() { return {segmap::Date::from_ymd(1996, 8, 31)}; }

/// Person i gets 1 + (i % 5 == 0) + (i % 15 == 0) + (i % 45 == 0) spells;
/// lengths, gaps, months and offers follow from i and the spell number.
inline std::vector<PlannedPerson> collation_plan(int n_persons) {
  std::vector<PlannedPerson> plan;
  const int window_days = fixture_window().end - fixture_origin();
  for (int i = 0; i < n_persons; ++i) {
    PlannedPerson person;
    person.id = "fx" + std::to_string(100000 + i);
    person.age = 18 + i % 47 + 0.25 * (i % 4);
    person.seniority = 0.5 * (i % 23);
    person.children = i % 4;
    const int n = 1 + (i % 5 == 0) + (i % 15 == 0) + (i % 45 == 0);
    int cursor = 7 * (i % 53);
    for (int s = 0; s < n; ++s) {
      PlannedSpell sp;
      sp.entry_offset = cursor;
      sp.length = 40 + (i * 37 + s * 101) % 260;
      const bool last = s + 1 == n;
      sp.open = last && i % 7 == 0;
      if (sp.open) sp.length = window_days - cursor;
      const int months = (i + s) % 3 == 0 ? 0 : 1 + (i + 2 * s) % 2;
      for (int m = 0; m < months; ++m) {
        const double hours = (i + m) % 6 == 0 ? 0.0 : 10.0 + (i * 13 + m * 29 + s * 7) % 150;
        sp.months.push_back({hours, hours * (6.5 + 0.25 * (i % 9))});
        sp.spell_of_month.push_back(1 + (m > 0 && i % 2 == 0));
      }
      sp.offers = (i + s) % 4;
      cursor += sp.length + 15 + (i % 11) * 3;
      person.spells.push_back(std::move(sp));
    }
    plan.push_back(std::move(person));
  }
  return plan;
}

inline std::vector<segmap::RegistrationRecord> plan_records(const std::vector<PlannedPerson>& plan) {
  using namespace segmap;
  std::vector<RegistrationRecord> out;
  for (const auto& person : plan) {
    for (const auto& sp : person.spells) {
      RegistrationRecord r;
      r.person_id = person.id;
      r.region = Region::nord();
      r.entry_date = fixture_origin() + sp.entry_offset;
      if (!sp.open) r.exit_date = r.entry_date + sp.length;
      r.exit_type = sp.open ? ExitType::None : ExitType::Job;
      r.job_loss_reason = JobLossReason::EndOfContract;
      r.age_years = person.age;
      r.seniority_years = person.seniority;
      r.children = person.children;
      r.job_offers = sp.offers;
      r.hour_range_class = HourRange::LE78;
      for (std::size_t m = 0; m < sp.months.size(); ++m) {
        r.occasional_months.push_back({sp.months[m].first, sp.months[m].second, sp.spell_of_month[m]});
      }
      out.push_back(std::move(r));
    }
  }
  // Deterministic shuffle so collation cannot rely on input order.
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[(i * 7919) % i]);
  return out;
}

/// The eleven features of a planned person, straight from the definitions:
/// months and years of unemployment use 30.44 and 365.25 days.
inline std::array<double, segmap::kFeatureCount> planned_features(const PlannedPerson& p) {
  double cum = 0.0, occ_months = 0.0;
  int occ_spells = 0, offers = 0;
  for (const auto& sp : p.spells) {
    cum += sp.length;
    for (const auto& [h, w] : sp.months) occ_months += h > 0.0 ? 1.0 : 0.0;
    occ_spells += static_cast<int>(std::set<int>(sp.spell_of_month.begin(), sp.spell_of_month.end()).size());
    offers += sp.offers;
  }
  const auto& last = p.spells.back();
  double max_h = 0.0, max_w = 0.0;
  for (const auto& [h, w] : last.months) {
    max_h = std::max(max_h, h);
    max_w = std::max(max_w, w);
  }
  const double months = cum / 30.44;
  const double years = cum / 365.25;
  const auto n = static_cast<double>(p.spells.size());
  return {p.age,
          p.seniority,
          static_cast<double>(last.length),
          cum,
          offers == 0 ? 0.0 : offers / months,
          n,
          occ_months == 0.0 ? 0.0 : occ_months / months,
          occ_spells == 0 ? 0.0 : occ_spells / years,
          occ_spells == 0 ? 0.0 : occ_spells / n,
          max_h,
          max_w};
}

}  // namespace oracle
