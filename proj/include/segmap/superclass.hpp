#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segmap/register.hpp"
#include "segmap/som.hpp"

namespace segmap {

struct Merge {
  int left = 0;   ///< smaller cluster id
  int right = 0;  ///< larger cluster id
  double height = 0.0;
  int new_cluster = 0;
};

/// P-1 merges; leaves are 0..P-1 and merge m creates cluster P+m.
struct MergeTree {
  int n_leaves = 0;
  std::vector<Merge> merges;
};

/// Ward cost between two weighted clusters:
/// w_a w_b / (w_a + w_b) * |mean_a - mean_b|^2 (0 when both weights are 0).
double ward_cost(double w_a, double w_b, double squared_distance);

/// Greedy Ward agglomeration with Lance-Williams updates. Ties go to the pair
/// with the lexicographically smallest (min id, max id). `weights` empty means
/// one per unit. Throws ConfigError for fewer than two points and
/// NumericalError if merge heights ever decrease.
MergeTree ward_tree(const Matrix& points, std::span<const double> weights = {});

struct SuperClassification {
  int k = 0;
  std::vector<int> label;                 ///< per unit, 1..k
  std::vector<std::vector<int>> members;  ///< members[label-1], ascending units
};

/// Partition after P-k merges. Labels are numbered by the smallest unit of
/// each cluster (the cluster holding unit 0 is label 1).
SuperClassification cut(const MergeTree& tree, int k);

struct ComponentInfo {
  int label = 0;
  std::vector<int> component_sizes;  ///< descending
  int n_components() const { return static_cast<int>(component_sizes.size()); }
};

/// Connected components of every super-class under 4-adjacency.
std::vector<ComponentInfo> connectivity_report(const SuperClassification& sc, const GridShape& shape);

struct ProfileRow {
  int label = 0;  ///< 0 for the total row
  long long size = 0;
  std::vector<std::optional<double>> means;  ///< per feature; absent when size is 0
};

/// Per-super-class observation counts and raw feature means, followed by a
/// total row.
std::vector<ProfileRow> profile(const SuperClassification& sc, const Assignment& assignment,
                                std::span<const FeatureVector> features);

/// Super-class of every observation.
std::vector<int> observation_labels(const SuperClassification& sc, const Assignment& assignment);

std::string write_merge_tree(const MergeTree& tree);
MergeTree read_merge_tree(std::string_view text);
std::string write_superclasses(const SuperClassification& sc);
SuperClassification read_superclasses(std::string_view text);
std::string write_connectivity(std::span<const ComponentInfo> report);
std::string write_profile(std::span<const ProfileRow> rows);

}  // namespace segmap
