#include "segmap/mca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "segmap/error.hpp"
#include "segmap/textio.hpp"

namespace segmap {

IndicatorMatrix build_indicator(std::span<const QualProfile> profiles, std::span<const QualVar> active_vars,
                                int max_classes) {
  IndicatorMatrix out;
  const auto n = static_cast<Eigen::Index>(profiles.size());

  // Per variable: canonical codes and per-individual code index.
  std::vector<std::vector<std::string>> codes;
  std::vector<std::vector<int>> index;
  for (QualVar v : active_vars) {
    auto cv = qual_var_codes(v, max_classes);
    std::vector<int> idx(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      const auto& code = profiles[i][v];
      if (code.empty()) {
        throw DataError("individual " + std::to_string(i) + " has no code for variable '" +
                        std::string(qual_var_name(v)) + "'");
      }
      const auto it = std::find(cv.begin(), cv.end(), code);
      if (it == cv.end()) {
        throw DataError("individual " + std::to_string(i) + " has unknown code '" + code +
                        "' for variable '" + std::string(qual_var_name(v)) + "'");
      }
      idx[i] = static_cast<int>(it - cv.begin());
    }
    codes.push_back(std::move(cv));
    index.push_back(std::move(idx));
  }

  std::vector<std::vector<int>> column_of(active_vars.size());
  int j = 0;
  for (std::size_t q = 0; q < active_vars.size(); ++q) {
    std::vector<long long> counts(codes[q].size(), 0);
    for (int c : index[q]) ++counts[c];
    VariableBlock block{active_vars[q], j, 0};
    column_of[q].assign(codes[q].size(), -1);
    for (std::size_t c = 0; c < codes[q].size(); ++c) {
      if (counts[c] == 0) {
        out.warnings.push_back("category '" + codes[q][c] + "' of variable '" +
                               std::string(qual_var_name(active_vars[q])) + "' never observed; dropped");
        continue;
      }
      column_of[q][c] = j++;
      ++block.n_columns;
      out.labels.push_back(codes[q][c]);
    }
    out.blocks.push_back(block);
  }

  out.z = Eigen::MatrixXd::Zero(n, j);
  for (std::size_t q = 0; q < active_vars.size(); ++q) {
    for (Eigen::Index i = 0; i < n; ++i) out.z(i, column_of[q][index[q][i]]) = 1.0;
  }
  return out;
}

BurtTable burt(const IndicatorMatrix& z) {
  const auto J = z.z.cols();
  const auto N = z.z.rows();
  std::vector<long long> counts(static_cast<std::size_t>(J * J), 0);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < N; ++i) {
    cols.clear();
    for (Eigen::Index c = 0; c < J; ++c) {
      if (z.z(i, c) != 0.0) cols.push_back(c);
    }
    for (auto a : cols) {
      for (auto b : cols) ++counts[static_cast<std::size_t>(a * J + b)];
    }
  }
  BurtTable t;
  t.b.resize(J, J);
  for (Eigen::Index a = 0; a < J; ++a) {
    for (Eigen::Index b = 0; b < J; ++b) t.b(a, b) = static_cast<double>(counts[static_cast<std::size_t>(a * J + b)]);
  }
  t.blocks = z.blocks;
  t.labels = z.labels;
  t.n_individuals = N;
  return t;
}

McaResult correspondence(const BurtTable& table) {
  const auto J = table.b.rows();
  if (J == 0) throw NumericalError("empty Burt table");
  const double total = table.b.sum();
  if (!(total > 0.0)) throw NumericalError("Burt table has zero grand total");
  const Eigen::MatrixXd P = table.b / total;
  const Eigen::VectorXd r = P.rowwise().sum();
  for (Eigen::Index j = 0; j < J; ++j) {
    if (!(r(j) > 0.0)) {
      throw NumericalError("category '" + (j < static_cast<Eigen::Index>(table.labels.size()) ? table.labels[j] : std::string("?")) +
                           "' has zero mass");
    }
  }
  const Eigen::VectorXd inv_sqrt = r.array().rsqrt();
  Eigen::MatrixXd S = inv_sqrt.asDiagonal() * (P - r * r.transpose()) * inv_sqrt.asDiagonal();
  S = 0.5 * (S + S.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition of the Burt table failed");

  McaResult out;
  out.total_inertia = S.trace();
  out.masses = r;
  out.labels = table.labels;
  out.blocks = table.blocks;

  const Eigen::VectorXd& evals = es.eigenvalues();  // ascending
  const double top = evals(J - 1);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = J - 1; k >= 0; --k) {
    if (top > 0.0 && evals(k) > 1e-10 * top) keep.push_back(k);
  }
  const auto A = static_cast<Eigen::Index>(keep.size());
  out.eigenvalues.resize(A);
  out.standard_coordinates.resize(J, A);
  for (Eigen::Index a = 0; a < A; ++a) {
    out.eigenvalues(a) = evals(keep[a]);
    Eigen::VectorXd col = inv_sqrt.asDiagonal() * es.eigenvectors().col(keep[a]);
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < J; ++j) {
      if (std::abs(col(j)) > std::abs(col(arg))) arg = j;
    }
    if (col(arg) < 0.0) col = -col;
    out.standard_coordinates.col(a) = col;
  }
  out.principal_coordinates = out.standard_coordinates * out.eigenvalues.cwiseSqrt().asDiagonal();
  out.shares = out.total_inertia > 0.0 ? Eigen::VectorXd(out.eigenvalues / out.total_inertia)
                                       : Eigen::VectorXd::Zero(A);
  return out;
}

SupplementaryCoordinates project_supplementary(const McaResult& result, const Eigen::MatrixXd& counts,
                                               std::vector<std::string> labels) {
  const auto J = result.standard_coordinates.rows();
  if (counts.cols() != J) {
    throw DataError("supplementary counts have " + std::to_string(counts.cols()) + " columns, expected " +
                    std::to_string(J));
  }
  if (static_cast<Eigen::Index>(labels.size()) != counts.rows()) {
    throw DataError("supplementary label count does not match the count rows");
  }
  SupplementaryCoordinates out;
  out.labels = std::move(labels);
  const Eigen::VectorXd root = result.eigenvalues.cwiseSqrt();
  for (Eigen::Index s = 0; s < counts.rows(); ++s) {
    const double mass = counts.row(s).sum();
    if (mass <= 0.0) {
      out.transition.emplace_back();
      out.principal.emplace_back();
      continue;
    }
    Eigen::VectorXd t = (counts.row(s) / mass * result.standard_coordinates).transpose();
    out.principal.emplace_back(t.cwiseQuotient(root));
    out.transition.emplace_back(std::move(t));
  }
  return out;
}

Eigen::MatrixXd supplementary_counts(std::span<const QualProfile> profiles, const IndicatorMatrix& z,
                                     QualVar variable, std::vector<std::string>& labels_out,
                                     int max_classes) {
  labels_out = qual_var_codes(variable, max_classes);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels_out.size()), z.z.cols());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto it = std::find(labels_out.begin(), labels_out.end(), profiles[i][variable]);
    if (it == labels_out.end()) {
      throw DataError("individual " + std::to_string(i) + " has unknown code '" + profiles[i][variable] +
                      "' for supplementary variable '" + std::string(qual_var_name(variable)) + "'");
    }
    counts.row(it - labels_out.begin()) += z.z.row(static_cast<Eigen::Index>(i));
  }
  return counts;
}

std::string write_mca_eigenvalues(const McaResult& result) {
  std::ostringstream os;
  os << "axis,eigenvalue,share,cumulative,burt_inertia\n";
  double cum = 0.0;
  for (int a = 0; a < result.n_axes(); ++a) {
    cum += result.shares(a);
    os << a + 1 << ',' << textio::exact(result.eigenvalues(a)) << ',' << textio::fixed(result.shares(a), 6)
       << ',' << textio::fixed(cum, 6) << ',' << textio::exact(result.eigenvalues(a) * result.eigenvalues(a))
       << '\n';
  }
  return os.str();
}

std::string write_mca_coordinates(const McaResult& result, std::span<const SupplementaryCoordinates> sups,
                                  int max_axes) {
  const int A = std::min(max_axes, result.n_axes());
  std::ostringstream os;
  os << "category,variable,status,mass";
  for (int a = 1; a <= A; ++a) os << ",axis" << a;
  os << '\n';
  for (const auto& block : result.blocks) {
    for (int c = block.first_column; c < block.first_column + block.n_columns; ++c) {
      os << result.labels[c] << ',' << qual_var_name(block.variable) << ",active,"
         << textio::fixed(result.masses(c), 8);
      for (int a = 0; a < A; ++a) os << ',' << textio::fixed(result.principal_coordinates(c, a), 8);
      os << '\n';
    }
  }
  for (const auto& sup : sups) {
    for (std::size_t s = 0; s < sup.labels.size(); ++s) {
      os << sup.labels[s] << ',' << sup.variable << ",supplementary,";
      if (!sup.principal[s]) {
        os << "NA";
        for (int a = 0; a < A; ++a) os << ",NA";
      } else {
        os << "0";
        for (int a = 0; a < A; ++a) os << ',' << textio::fixed((*sup.principal[s])(a), 8);
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace segmap
