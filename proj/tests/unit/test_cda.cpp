#include "doctest.h"

#include <cmath>
#include <vector>

#include "segmap/cda.hpp"
#include "segmap/error.hpp"
#include "segmap/rng.hpp"

using namespace segmap;

namespace {

struct Labelled {
  Matrix x;
  std::vector<int> labels;
};

/// g Gaussian-ish clouds in p dimensions with distinct centres.
Labelled clouds(int n, int p, int g, std::uint64_t seed) {
  auto rng = SplitMix64::stream(seed, 0);
  Labelled out{Matrix(n, p), std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    const int c = i % g;
    out.labels[i] = c + 1;
    for (int j = 0; j < p; ++j) {
      const double noise = rng.uniform() + rng.uniform() + rng.uniform() - 1.5;
      out.x(i, j) = noise + ((c + j) % 3 == 0 ? 1.5 * c : -0.3 * c * (j % 2));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("two classes on a line") {
  Matrix x(4, 1);
  x << 0, 2, 4, 6;
  const std::vector<int> labels{1, 1, 2, 2};
  const auto s = scatter(x, labels);
  CHECK(s.within_ss(0, 0) == 4.0);
  CHECK(s.between_ss(0, 0) == 16.0);
  CHECK(s.within(0, 0) == 2.0);
  CHECK(s.between(0, 0) == 16.0);
  const auto r = canonical(s);
  CHECK(r.eigenvalues(0) == doctest::Approx(8.0));
  CHECK(r.coefficients(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(r.structure(0, 0) == doctest::Approx(1.0));
  CHECK(r.n_nonzero == 1);
}

TEST_CASE("within plus between is total") {
  const auto d = clouds(300, 5, 4, 1);
  const auto s = scatter(d.x, d.labels);
  const Eigen::MatrixXd diff = s.within_ss + s.between_ss - s.total_ss;
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-9 * s.total_ss.cwiseAbs().maxCoeff());
  CHECK(s.n_classes == 4);
  CHECK(s.class_sizes[0] == 75);
}

TEST_CASE("canonical variables are W-orthonormal and rank-limited") {
  const auto d = clouds(400, 6, 4, 2);
  const auto s = scatter(d.x, d.labels);
  const auto r = canonical(s);
  const Eigen::MatrixXd gram = r.coefficients.transpose() * s.within * r.coefficients;
  CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(r.n_nonzero <= 3);
  CHECK(std::abs(r.shares.sum() - 1.0) <= 1e-10);
  for (Eigen::Index k = 1; k < r.shares.size(); ++k) CHECK(r.shares(k) <= r.shares(k - 1));
  for (Eigen::Index k = 0; k < 6; ++k) {
    Eigen::Index arg;
    r.coefficients.col(k).cwiseAbs().maxCoeff(&arg);
    CHECK(r.coefficients(arg, k) > 0);
  }
}

TEST_CASE("eigenvalues are invariant under an invertible affine map") {
  const auto d = clouds(500, 5, 5, 3);
  const auto before = canonical(scatter(d.x, d.labels));
  auto rng = SplitMix64::stream(3, 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) += 0.4 * (rng.uniform() - 0.5);
  Eigen::RowVectorXd shift(5);
  for (int j = 0; j < 5; ++j) shift(j) = 10.0 * rng.uniform();
  const Matrix moved = (d.x * a).rowwise() + shift;
  const auto after = canonical(scatter(moved, d.labels));
  for (int k = 0; k < 5; ++k) CHECK(std::abs(before.eigenvalues(k) - after.eigenvalues(k)) <= 1e-8);
}

TEST_CASE("class means on canonical axes") {
  const auto d = clouds(200, 3, 3, 4);
  const auto r = canonical(scatter(d.x, d.labels));
  const Matrix scores = canonical_scores(r, d.x);
  const auto means = class_means_on_canonicals(r, d.x, d.labels);
  REQUIRE(means.rows() == 3);
  Eigen::RowVectorXd m0 = Eigen::RowVectorXd::Zero(3);
  int n0 = 0;
  for (int i = 0; i < 200; ++i) {
    if (d.labels[i] != 1) continue;
    m0 += scores.row(i);
    ++n0;
  }
  m0 /= n0;
  CHECK((means.row(0) - m0).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(scores.colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("singular within scatter needs a ridge") {
  auto d = clouds(100, 3, 2, 5);
  d.x.col(2) = 2.0 * d.x.col(0) - d.x.col(1);
  const auto s = scatter(d.x, d.labels);
  CHECK_THROWS_AS(canonical(s), NumericalError);
  const auto r = canonical(s, CdaOptions{1e-6});
  CHECK(r.ridge_applied > 0.0);
  CHECK(r.n_nonzero == 1);
}

TEST_CASE("input errors") {
  const auto d = clouds(20, 2, 2, 6);
  std::vector<int> gap = d.labels;
  for (auto& l : gap) l = l == 2 ? 3 : l;
  CHECK_THROWS_AS(scatter(d.x, gap), DataError);
  std::vector<int> zero = d.labels;
  zero[0] = 0;
  CHECK_THROWS_AS(scatter(d.x, zero), DataError);
  CHECK_THROWS_AS(scatter(d.x.topRows(2), std::vector<int>{1, 2}), DataError);
}

TEST_CASE("writers") {
  const auto d = clouds(60, 3, 3, 7);
  const auto r = canonical(scatter(d.x, d.labels));
  const auto eig = write_cda_eigenvalues(r, 2);
  CHECK(eig.rfind("component,eigenvalue,share,cumulative\n", 0) == 0);
  const auto coef = write_cda_matrix(r.coefficients, {"a", "b", "c"}, "variable", 2);
  CHECK(coef.rfind("variable,can1,can2\na,", 0) == 0);
}
