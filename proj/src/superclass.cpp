#include "segmap/superclass.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

#include "segmap/error.hpp"
#include "segmap/textio.hpp"

namespace segmap {

double ward_cost(double w_a, double w_b, double squared_distance) {
  const double total = w_a + w_b;
  if (total <= 0.0) return 0.0;
  return w_a * w_b / total * squared_distance;
}

MergeTree ward_tree(const Matrix& points, std::span<const double> weights) {
  const int P = static_cast<int>(points.rows());
  if (P < 2) throw ConfigError("Ward clustering needs at least two points");
  if (!weights.empty() && static_cast<int>(weights.size()) != P) {
    throw ConfigError("weight count does not match the number of points");
  }
  std::vector<double> w(static_cast<std::size_t>(P), 1.0);
  if (!weights.empty()) {
    for (int i = 0; i < P; ++i) {
      if (!(weights[i] >= 0.0)) throw ConfigError("Ward weights must be non-negative");
      w[i] = weights[i];
    }
  }

  // Dissimilarities between active slots; slot i holds cluster id[i].
  std::vector<std::vector<double>> cost(P, std::vector<double>(P, 0.0));
  for (int i = 0; i < P; ++i) {
    for (int j = i + 1; j < P; ++j) {
      cost[i][j] = cost[j][i] = ward_cost(w[i], w[j], (points.row(i) - points.row(j)).squaredNorm());
    }
  }
  std::vector<int> id(P);
  std::iota(id.begin(), id.end(), 0);
  std::vector<bool> active(P, true);

  MergeTree tree;
  tree.n_leaves = P;
  for (int m = 0; m < P - 1; ++m) {
    int bi = -1, bj = -1;
    double best = 0.0;
    for (int i = 0; i < P; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < P; ++j) {
        if (!active[j]) continue;
        const double c = cost[i][j];
        bool better = bi < 0 || c < best;
        if (!better && c == best) {
          const auto cand = std::minmax(id[i], id[j]);
          const auto cur = std::minmax(id[bi], id[bj]);
          better = cand < cur;
        }
        if (better) {
          bi = i;
          bj = j;
          best = c;
        }
      }
    }
    const auto [lo, hi] = std::minmax(id[bi], id[bj]);
    if (!tree.merges.empty()) {
      const double prev = tree.merges.back().height;
      if (best < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
        throw NumericalError("Ward merge heights decreased; input is not a valid Euclidean configuration");
      }
    }
    tree.merges.push_back({lo, hi, best, P + m});

    // Lance-Williams: merged cluster stays in slot bi.
    const double wi = w[bi], wj = w[bj];
    for (int k = 0; k < P; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double wk = w[k];
      const double denom = wi + wj + wk;
      double updated = 0.0;
      if (denom > 0.0) {
        updated = ((wi + wk) * cost[k][bi] + (wj + wk) * cost[k][bj] - wk * best) / denom;
      }
      cost[k][bi] = cost[bi][k] = std::max(0.0, updated);
    }
    w[bi] = wi + wj;
    id[bi] = P + m;
    active[bj] = false;
  }
  return tree;
}

SuperClassification cut(const MergeTree& tree, int k) {
  const int P = tree.n_leaves;
  if (k < 1 || k > P) {
    throw ConfigError("cannot cut a tree of " + std::to_string(P) + " leaves into " +
                      std::to_string(k) + " classes");
  }
  // Union-find over cluster ids 0 .. 2P-2.
  std::vector<int> parent(static_cast<std::size_t>(2 * P - 1));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (int m = 0; m < P - k; ++m) {
    const auto& mg = tree.merges[m];
    parent[find(mg.left)] = mg.new_cluster;
    parent[find(mg.right)] = mg.new_cluster;
  }
  SuperClassification sc;
  sc.k = k;
  sc.label.assign(P, 0);
  std::map<int, int> root_label;
  for (int u = 0; u < P; ++u) {
    const int root = find(u);
    auto it = root_label.find(root);
    if (it == root_label.end()) it = root_label.emplace(root, static_cast<int>(root_label.size()) + 1).first;
    sc.label[u] = it->second;
  }
  sc.members.assign(k, {});
  for (int u = 0; u < P; ++u) sc.members[sc.label[u] - 1].push_back(u);
  return sc;
}

std::vector<ComponentInfo> connectivity_report(const SuperClassification& sc, const GridShape& shape) {
  const int P = shape.units();
  if (static_cast<int>(sc.label.size()) != P) {
    throw DataError("super-classification does not cover every unit of the grid");
  }
  std::vector<ComponentInfo> out(static_cast<std::size_t>(sc.k));
  for (int l = 0; l < sc.k; ++l) out[l].label = l + 1;
  std::vector<bool> seen(P, false);
  for (int start = 0; start < P; ++start) {
    if (seen[start]) continue;
    const int label = sc.label[start];
    int size = 0;
    std::queue<int> q;
    q.push(start);
    seen[start] = true;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      ++size;
      const int r = shape.row(u), c = shape.col(u);
      const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& rc : nbr) {
        if (rc[0] < 0 || rc[0] >= shape.n_rows || rc[1] < 0 || rc[1] >= shape.n_cols) continue;
        const int v = rc[0] * shape.n_cols + rc[1];
        if (!seen[v] && sc.label[v] == label) {
          seen[v] = true;
          q.push(v);
        }
      }
    }
    out[label - 1].component_sizes.push_back(size);
  }
  for (auto& info : out) std::sort(info.component_sizes.rbegin(), info.component_sizes.rend());
  return out;
}

std::vector<int> observation_labels(const SuperClassification& sc, const Assignment& assignment) {
  std::vector<int> labels;
  labels.reserve(assignment.unit.size());
  for (int u : assignment.unit) {
    if (u < 0 || u >= static_cast<int>(sc.label.size())) {
      throw DataError("assignment refers to unit " + std::to_string(u) + " outside the map");
    }
    labels.push_back(sc.label[u]);
  }
  return labels;
}

std::vector<ProfileRow> profile(const SuperClassification& sc, const Assignment& assignment,
                                std::span<const FeatureVector> features) {
  if (assignment.unit.size() != features.size()) {
    throw DataError("assignment and feature table have different lengths");
  }
  const auto labels = observation_labels(sc, assignment);
  std::vector<std::vector<double>> sums(sc.k + 1, std::vector<double>(kFeatureCount, 0.0));
  std::vector<long long> counts(sc.k + 1, 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (int slot : {labels[i], 0}) {
      ++counts[slot];
      for (std::size_t j = 0; j < kFeatureCount; ++j) sums[slot][j] += features[i].values[j];
    }
  }
  std::vector<ProfileRow> rows;
  auto make_row = [&](int slot) {
    ProfileRow row{slot, counts[slot], std::vector<std::optional<double>>(kFeatureCount)};
    if (counts[slot] > 0) {
      for (std::size_t j = 0; j < kFeatureCount; ++j) {
        row.means[j] = sums[slot][j] / static_cast<double>(counts[slot]);
      }
    }
    return row;
  };
  for (int l = 1; l <= sc.k; ++l) rows.push_back(make_row(l));
  rows.push_back(make_row(0));
  return rows;
}

// ---------------------------------------------------------------------------

std::string write_merge_tree(const MergeTree& tree) {
  std::ostringstream os;
  for (const auto& m : tree.merges) os << m.left << ' ' << m.right << ' ' << textio::exact(m.height) << '\n';
  return os.str();
}

MergeTree read_merge_tree(std::string_view text) {
  MergeTree tree;
  const auto rows = textio::lines(text);
  for (const auto& row : rows) {
    if (row.empty()) continue;
    const auto f = textio::split(row, ' ');
    if (f.size() != 3) throw DataError("merge tree: expected 'left right height'");
    Merge m;
    m.left = static_cast<int>(textio::parse_int(f[0], "left"));
    m.right = static_cast<int>(textio::parse_int(f[1], "right"));
    m.height = textio::parse_double(f[2], "height");
    tree.merges.push_back(m);
  }
  tree.n_leaves = static_cast<int>(tree.merges.size()) + 1;
  for (std::size_t i = 0; i < tree.merges.size(); ++i) {
    tree.merges[i].new_cluster = tree.n_leaves + static_cast<int>(i);
  }
  return tree;
}

std::string write_superclasses(const SuperClassification& sc) {
  std::ostringstream os;
  for (std::size_t u = 0; u < sc.label.size(); ++u) os << u << ' ' << sc.label[u] << '\n';
  return os.str();
}

SuperClassification read_superclasses(std::string_view text) {
  SuperClassification sc;
  for (const auto& row : textio::lines(text)) {
    if (row.empty()) continue;
    const auto f = textio::split(row, ' ');
    if (f.size() != 2) throw DataError("super-classification: expected 'unit_index label'");
    const auto unit = textio::parse_int(f[0], "unit");
    if (unit != static_cast<long long>(sc.label.size())) {
      throw DataError("super-classification: units must be listed in order");
    }
    sc.label.push_back(static_cast<int>(textio::parse_int(f[1], "label")));
  }
  sc.k = sc.label.empty() ? 0 : *std::max_element(sc.label.begin(), sc.label.end());
  sc.members.assign(sc.k, {});
  for (std::size_t u = 0; u < sc.label.size(); ++u) {
    if (sc.label[u] < 1) throw DataError("super-classification: labels start at 1");
    sc.members[sc.label[u] - 1].push_back(static_cast<int>(u));
  }
  return sc;
}

std::string write_connectivity(std::span<const ComponentInfo> report) {
  std::ostringstream os;
  os << "super_class,n_components,component_sizes,split\n";
  for (const auto& info : report) {
    os << info.label << ',' << info.n_components() << ',';
    for (std::size_t i = 0; i < info.component_sizes.size(); ++i) {
      os << (i ? " " : "") << info.component_sizes[i];
    }
    os << ',' << (info.n_components() > 1 ? "yes" : "no") << '\n';
  }
  return os.str();
}

std::string write_profile(std::span<const ProfileRow> rows) {
  std::ostringstream os;
  os << "super_class,size";
  for (auto name : feature_names()) os << ',' << name;
  os << '\n';
  for (const auto& row : rows) {
    os << (row.label == 0 ? std::string("Total") : std::to_string(row.label)) << ',' << row.size;
    for (const auto& m : row.means) os << ',' << (m ? textio::fixed(*m, 2) : std::string("NA"));
    os << '\n';
  }
  return os.str();
}

}  // namespace segmap
