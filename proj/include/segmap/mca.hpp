#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "segmap/register.hpp"

namespace segmap {

/// Column block of one qualitative variable inside the indicator matrix.
struct VariableBlock {
  QualVar variable;
  int first_column = 0;
  int n_columns = 0;
};

/// N x J complete disjunctive table.
struct IndicatorMatrix {
  Eigen::MatrixXd z;
  std::vector<VariableBlock> blocks;
  std::vector<std::string> labels;    ///< category code per column
  std::vector<std::string> warnings;  ///< dropped (never observed) categories

  int n_variables() const { return static_cast<int>(blocks.size()); }
};

/// One column per observed category of each active variable, in canonical
/// code order. Throws DataError naming the individual when a profile has no
/// code (or an unknown code) for an active variable.
IndicatorMatrix build_indicator(std::span<const QualProfile> profiles, std::span<const QualVar> active_vars,
                                int max_classes = 10);

struct BurtTable {
  Eigen::MatrixXd b;  ///< J x J, b = z^T z
  std::vector<VariableBlock> blocks;
  std::vector<std::string> labels;
  long long n_individuals = 0;

  double grand_total() const { return b.sum(); }
};

BurtTable burt(const IndicatorMatrix& z);

/// Correspondence analysis of a Burt table.
///
/// S = D^-1/2 (P - r r^T) D^-1/2 with P = B / total. `eigenvalues` are the
/// eigenvalues of S (they equal the principal inertias of the indicator-matrix
/// analysis, mean 1/Q under independence); the principal inertias of the
/// Burt table itself are their squares. Only axes with eigenvalue above
/// 1e-10 of the largest are kept; each axis is oriented so that its
/// largest-magnitude coordinate is positive.
struct McaResult {
  Eigen::VectorXd eigenvalues;          ///< descending, nontrivial axes
  Eigen::VectorXd shares;               ///< eigenvalue / trace(S)
  double total_inertia = 0.0;           ///< trace(S)
  Eigen::VectorXd masses;               ///< r
  Eigen::MatrixXd standard_coordinates; ///< J x A, D^-1/2 U
  Eigen::MatrixXd principal_coordinates;///< J x A, standard * sqrt(eigenvalue)
  std::vector<std::string> labels;
  std::vector<VariableBlock> blocks;

  int n_axes() const { return static_cast<int>(eigenvalues.size()); }
  /// Principal inertias of the Burt table (eigenvalues squared).
  Eigen::VectorXd burt_inertias() const { return eigenvalues.array().square(); }
};

/// Throws NumericalError for a zero-mass category or a failed eigen-solve.
McaResult correspondence(const BurtTable& table);

struct SupplementaryCoordinates {
  std::string variable;
  std::vector<std::string> labels;
  /// Transition-formula value: active-column profile times the standard
  /// coordinates. For a category distributed like active category j this is
  /// eigenvalue * standard coordinate, i.e. sqrt(eigenvalue) times the
  /// principal coordinate of j.
  std::vector<std::optional<Eigen::VectorXd>> transition;
  /// `transition` divided by sqrt(eigenvalue): same scale as the active
  /// principal coordinates, used for plotting.
  std::vector<std::optional<Eigen::VectorXd>> principal;
};

/// `counts` is (supplementary categories) x J cross-counts with the active
/// categories. Empty supplementary categories give absent rows.
SupplementaryCoordinates project_supplementary(const McaResult& result, const Eigen::MatrixXd& counts,
                                               std::vector<std::string> labels);

/// Cross-counts of the codes of `variable` against the indicator columns.
Eigen::MatrixXd supplementary_counts(std::span<const QualProfile> profiles, const IndicatorMatrix& z,
                                     QualVar variable, std::vector<std::string>& labels_out,
                                     int max_classes = 10);

/// Delimited text: category,variable,status,mass,axis1..axisA; supplementary
/// rows follow the active ones with mass 0 (NA for empty categories).
std::string write_mca_coordinates(const McaResult& result, std::span<const SupplementaryCoordinates> sups,
                                  int max_axes);
std::string write_mca_eigenvalues(const McaResult& result);

}  // namespace segmap
