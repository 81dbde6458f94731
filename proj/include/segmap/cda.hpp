#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "segmap/som.hpp"

namespace segmap {

/// Within- and between-class scatter. The raw sums of squares and products
/// satisfy within_ss + between_ss = total_ss; `within` and `between` are the
/// covariance-scale versions (divisors N-g and g-1).
struct Scatter {
  Eigen::MatrixXd within_ss;
  Eigen::MatrixXd between_ss;
  Eigen::MatrixXd total_ss;
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
  Eigen::VectorXd grand_mean;
  Eigen::MatrixXd class_means;  ///< g x p
  std::vector<long long> class_sizes;
  long long n = 0;
  int n_classes = 0;
  /// Square-root factors: R (p x p, upper triangular) from the QR of the
  /// within-class-centred data, R^T R = within_ss; G (g x p) with rows
  /// sqrt(n_c) (mean_c - grand_mean), G^T G = between_ss. canonical() works
  /// from these when present so W is never squared into existence.
  Eigen::MatrixXd within_factor;
  Eigen::MatrixXd between_factor;
};

/// `labels` run from 1 to g; every class must be non-empty and N > p.
Scatter scatter(const Matrix& features, std::span<const int> labels);

struct CdaOptions {
  /// When > 0 and cond(W) exceeds 1e12, W += ridge * trace(W) / p * I.
  double ridge = 0.0;
};

struct CdaResult {
  Eigen::VectorXd eigenvalues;      ///< descending, p entries, tiny values zeroed
  Eigen::VectorXd shares;           ///< eigenvalue / sum
  Eigen::MatrixXd coefficients;     ///< p x p, column k = canonical variable k
  Eigen::MatrixXd structure;        ///< p x p pooled within-class correlations
  Eigen::VectorXd center;           ///< grand mean used to centre scores
  int n_nonzero = 0;                ///< eigenvalues above 1e-10 * largest
  double ridge_applied = 0.0;       ///< 0 when W was used as is
  double within_condition = 0.0;
};

/// Generalised symmetric eigenproblem B a = lambda W a. Solved as an SVD of
/// G R^-1 from the scatter factors, or through the Cholesky factor of W when
/// the factors are absent or a ridge was applied. Coefficients satisfy a^T W a = 1; the largest-magnitude
/// coefficient of every component is positive. Throws NumericalError when W
/// is singular and no ridge was requested.
CdaResult canonical(const Scatter& s, const CdaOptions& options = {});

/// Canonical scores, (X - center) * coefficients.
Matrix canonical_scores(const CdaResult& result, const Matrix& features);

/// g x p matrix of per-class means of the canonical scores.
Eigen::MatrixXd class_means_on_canonicals(const CdaResult& result, const Matrix& features,
                                          std::span<const int> labels);

std::string write_cda_eigenvalues(const CdaResult& r, int components);
std::string write_cda_matrix(const Eigen::MatrixXd& m, const std::vector<std::string>& row_names,
                             std::string_view row_header, int components);

}  // namespace segmap
