#include "segmap/cda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "segmap/error.hpp"
#include "segmap/textio.hpp"

namespace segmap {

Scatter scatter(const Matrix& X, std::span<const int> labels) {
  const auto N = X.rows();
  const auto p = X.cols();
  if (static_cast<Eigen::Index>(labels.size()) != N) throw DataError("label count does not match rows");
  if (N <= p) throw DataError("discriminant analysis needs more observations than variables");
  const int g = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  for (int l : labels) {
    if (l < 1) throw DataError("class labels must start at 1");
  }

  Scatter s;
  s.n = N;
  s.n_classes = g;
  s.class_sizes.assign(g, 0);
  s.class_means = Eigen::MatrixXd::Zero(g, p);
  for (Eigen::Index i = 0; i < N; ++i) {
    ++s.class_sizes[labels[i] - 1];
    s.class_means.row(labels[i] - 1) += X.row(i);
  }
  for (int c = 0; c < g; ++c) {
    if (s.class_sizes[c] == 0) throw DataError("class " + std::to_string(c + 1) + " is empty");
    s.class_means.row(c) /= static_cast<double>(s.class_sizes[c]);
  }
  s.grand_mean = X.colwise().mean().transpose();

  Eigen::MatrixXd xw(N, p);
  s.within_ss = Eigen::MatrixXd::Zero(p, p);
  s.total_ss = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Eigen::VectorXd dw = X.row(i).transpose() - s.class_means.row(labels[i] - 1).transpose();
    const Eigen::VectorXd dt = X.row(i).transpose() - s.grand_mean;
    xw.row(i) = dw.transpose();
    s.within_ss.noalias() += dw * dw.transpose();
    s.total_ss.noalias() += dt * dt.transpose();
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(xw);
  s.within_factor = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  s.between_ss = Eigen::MatrixXd::Zero(p, p);
  s.between_factor.resize(g, p);
  for (int c = 0; c < g; ++c) {
    const Eigen::VectorXd dm = s.class_means.row(c).transpose() - s.grand_mean;
    s.between_ss.noalias() += static_cast<double>(s.class_sizes[c]) * dm * dm.transpose();
    s.between_factor.row(c) = std::sqrt(static_cast<double>(s.class_sizes[c])) * dm.transpose();
  }
  s.within = s.within_ss / static_cast<double>(N - g);
  s.between = g > 1 ? Eigen::MatrixXd(s.between_ss / static_cast<double>(g - 1)) : Eigen::MatrixXd::Zero(p, p);
  return s;
}

CdaResult canonical(const Scatter& s, const CdaOptions& options) {
  const auto p = s.within.rows();
  CdaResult out;
  Eigen::MatrixXd W = 0.5 * (s.within + s.within.transpose());
  const Eigen::MatrixXd B = 0.5 * (s.between + s.between.transpose());

  const bool factored = s.within_factor.rows() == p && s.between_factor.cols() == p && s.n > s.n_classes &&
                        s.n_classes > 1;
  if (factored) {
    Eigen::JacobiSVD<Eigen::MatrixXd> rsvd(s.within_factor);
    const double smax = rsvd.singularValues().maxCoeff();
    const double smin = rsvd.singularValues().minCoeff();
    out.within_condition = smin > 0.0 ? (smax / smin) * (smax / smin) : std::numeric_limits<double>::infinity();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> wes(W, Eigen::EigenvaluesOnly);
    const double wmax = wes.eigenvalues().maxCoeff();
    const double wmin = wes.eigenvalues().minCoeff();
    out.within_condition = wmin > 0.0 ? wmax / wmin : std::numeric_limits<double>::infinity();
  }
  if (!(out.within_condition <= 1e12)) {
    if (options.ridge <= 0.0) {
      throw NumericalError("within-class scatter is singular or ill-conditioned (condition number " +
                           textio::exact(out.within_condition) + "); rerun with a ridge, e.g. --ridge 1e-6");
    }
    out.ridge_applied = options.ridge * W.trace() / static_cast<double>(p);
    W += out.ridge_applied * Eigen::MatrixXd::Identity(p, p);
  }

  out.eigenvalues = Eigen::VectorXd::Zero(p);
  out.coefficients.resize(p, p);
  // Columns of V are orthonormal eigenvectors of U^-T B U^-1 where U^T U = W;
  // the canonical coefficients are U^-1 V.
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  if (factored && out.ridge_applied == 0.0) {
    U = s.within_factor / std::sqrt(static_cast<double>(s.n - s.n_classes));
    const Eigen::MatrixXd G = s.between_factor / std::sqrt(static_cast<double>(s.n_classes - 1));
    // Y = G U^-1, so Y^T Y = U^-T B U^-1.
    const Eigen::MatrixXd Y = U.transpose().triangularView<Eigen::Lower>().solve(G.transpose()).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> ysvd(Y, Eigen::ComputeFullV);
    const auto& sv = ysvd.singularValues();
    for (Eigen::Index k = 0; k < sv.size(); ++k) out.eigenvalues(k) = sv(k) * sv(k);
    V = ysvd.matrixV();
  } else {
    const Eigen::LLT<Eigen::MatrixXd> llt(W);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorisation of the within-class scatter failed");
    U = llt.matrixU();
    // M = U^-T B U^-1
    const Eigen::MatrixXd UtinvB = U.transpose().triangularView<Eigen::Lower>().solve(B);
    Eigen::MatrixXd M = U.transpose().triangularView<Eigen::Lower>().solve(UtinvB.transpose());
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw NumericalError("canonical eigen-solver did not converge");
    V.resize(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      out.eigenvalues(k) = es.eigenvalues()(p - 1 - k);
      V.col(k) = es.eigenvectors().col(p - 1 - k);
    }
  }
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::VectorXd a = U.triangularView<Eigen::Upper>().solve(V.col(k));
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < p; ++j) {
      if (std::abs(a(j)) > std::abs(a(arg))) arg = j;
    }
    if (a(arg) < 0.0) a = -a;
    out.coefficients.col(k) = a;
  }
  const double top = std::max(0.0, out.eigenvalues(0));
  out.n_nonzero = 0;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (top > 0.0 && out.eigenvalues(k) > 1e-10 * top) {
      ++out.n_nonzero;
    } else {
      out.eigenvalues(k) = 0.0;
    }
  }
  const double sum = out.eigenvalues.sum();
  out.shares = sum > 0.0 ? Eigen::VectorXd(out.eigenvalues / sum) : Eigen::VectorXd::Zero(p);

  // Pooled within-class correlation of each variable with each canonical variable.
  const Eigen::VectorXd sd = W.diagonal().cwiseSqrt();
  out.structure = sd.cwiseInverse().asDiagonal() * W * out.coefficients;
  out.center = s.grand_mean;
  return out;
}

Matrix canonical_scores(const CdaResult& result, const Matrix& features) {
  Matrix centered = features.rowwise() - result.center.transpose();
  return centered * result.coefficients;
}

Eigen::MatrixXd class_means_on_canonicals(const CdaResult& result, const Matrix& features,
                                          std::span<const int> labels) {
  const Matrix scores = canonical_scores(result, features);
  const int g = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(g, scores.cols());
  std::vector<long long> counts(g, 0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    means.row(labels[i] - 1) += scores.row(i);
    ++counts[labels[i] - 1];
  }
  for (int c = 0; c < g; ++c) {
    if (counts[c] > 0) means.row(c) /= static_cast<double>(counts[c]);
  }
  return means;
}

std::string write_cda_eigenvalues(const CdaResult& r, int components) {
  std::ostringstream os;
  os << "component,eigenvalue,share,cumulative\n";
  double cum = 0.0;
  for (int k = 0; k < components; ++k) {
    cum += r.shares(k);
    os << k + 1 << ',' << textio::exact(r.eigenvalues(k)) << ',' << textio::fixed(r.shares(k), 6) << ','
       << textio::fixed(cum, 6) << '\n';
  }
  if (r.ridge_applied > 0.0) os << "# ridge " << textio::exact(r.ridge_applied) << '\n';
  return os.str();
}

std::string write_cda_matrix(const Eigen::MatrixXd& m, const std::vector<std::string>& row_names,
                             std::string_view row_header, int components) {
  std::ostringstream os;
  os << row_header;
  for (int k = 1; k <= components; ++k) os << ",can" << k;
  os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << row_names[static_cast<std::size_t>(i)];
    for (int k = 0; k < components; ++k) os << ',' << textio::fixed(m(i, k), 6);
    os << '\n';
  }
  return os.str();
}

}  // namespace segmap
