#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "segmap/error.hpp"
#include "segmap/rng.hpp"
#include "segmap/som.hpp"

using namespace segmap;

namespace {

Matrix random_matrix(int n, int d, std::uint64_t seed) {
  auto rng = SplitMix64::stream(seed, 99);
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = 4.0 * rng.uniform() - 2.0;
  return m;
}

}  // namespace

TEST_CASE("splitmix64 reference values") {
  // First outputs for seed 0 from the published reference implementation.
  SplitMix64 g(0);
  CHECK(g.next() == 0xE220A8397B1DCDAFULL);
  CHECK(g.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(g.next() == 0x06C45D188009454FULL);
  SplitMix64 h(7);
  for (int i = 0; i < 1000; ++i) {
    const auto v = h.bounded(13);
    REQUIRE(v < 13);
    const double u = h.uniform_open();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("schedule") {
  TrainingSchedule s;
  s.total_steps = 1000;
  s.eps0 = 0.5;
  s.eps_min = 0.01;
  s.radius0 = 4;
  CHECK(s.epsilon(0) == 0.5);
  CHECK(s.epsilon(1000) == doctest::Approx(0.01));
  CHECK(s.epsilon(500) == doctest::Approx(std::sqrt(0.5 * 0.01)));
  CHECK(s.radius(0) == 4);
  CHECK(s.radius(199) == 4);
  CHECK(s.radius(200) == 3);
  CHECK(s.radius(999) == 0);
  for (std::int64_t t = 1; t < 1000; ++t) {
    REQUIRE(s.epsilon(t) < s.epsilon(t - 1));
    REQUIRE(s.radius(t) <= s.radius(t - 1));
  }

  TrainingSchedule bad = s;
  bad.eps0 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.eps_min = 0.6;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.radius0 = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("lattice neighbourhoods are Chebyshev squares") {
  const GridShape g{10, 10};
  CHECK(g.lattice_distance(0, 11) == 1);
  CHECK(g.lattice_distance(0, 99) == 9);
  CHECK(som_neighborhood(g, 0, 1) == std::vector<int>{0, 1, 10, 11});
  CHECK(som_neighborhood(g, 55, 1).size() == 9);
  CHECK(som_neighborhood(g, 55, 0) == std::vector<int>{55});
  CHECK(som_neighborhood(g, 55, 20).size() == 100);
}

TEST_CASE("winner ties go to the smallest unit") {
  SomGrid grid{{1, 3}, Matrix(3, 1)};
  grid.codes << 1.0, -1.0, 1.0;
  const double x = 0.0;
  CHECK(som_winner(grid, {&x, 1}) == 0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(som_winner(grid, {&nan, 1}), DataError);
  const double two[2] = {0.0, 0.0};
  CHECK_THROWS_AS(som_winner(grid, {two, 2}), DataError);
}

TEST_CASE("update moves exactly the winner's neighbourhood") {
  auto rng = SplitMix64::stream(3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    SomGrid grid{{4, 5}, random_matrix(20, 3, trial)};
    const SomGrid before = grid;
    const double x[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double eps = rng.uniform_open();
    const int radius = static_cast<int>(rng.bounded(4));
    const int w = som_update(grid, {x, 3}, eps, radius);
    for (int u = 0; u < 20; ++u) {
      for (int j = 0; j < 3; ++j) {
        if (grid.shape.lattice_distance(u, w) <= radius) {
          REQUIRE(std::abs(grid.codes(u, j) - ((1 - eps) * before.codes(u, j) + eps * x[j])) <= 1e-12);
        } else {
          REQUIRE(grid.codes(u, j) == before.codes(u, j));
        }
      }
    }
  }
}

TEST_CASE("radius 0 with constant gain is online k-means") {
  const Matrix data = random_matrix(200, 4, 11);
  TrainingSchedule s;
  s.total_steps = 3000;
  s.eps0 = s.eps_min = 0.05;
  s.radius0 = 0;
  s.seed = 5;
  const auto model = som_train(som_init({3, 3}, data, 5), data, s);
  const auto ref = oracle::online_kmeans(data, 9, 0.05, 3000, 5);
  CHECK((model.grid.codes.array() == ref.array()).all());
}

TEST_CASE("standardizer") {
  Matrix m(4, 2);
  m << 1, 5, 2, 5, 3, 5, 6, 5;
  const auto st = Standardizer::fit(m);
  CHECK(st.scale(1) == 1.0);
  const Matrix z = st.apply(m);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(z.col(0).squaredNorm() / 4 == doctest::Approx(1.0));
  CHECK(z.col(1).isZero());
  CHECK(st.invert(z).isApprox(m));
}

TEST_CASE("quality on a hand map") {
  SomGrid grid{{1, 3}, Matrix(3, 1)};
  grid.codes << 0.0, 10.0, 5.0;
  Matrix data(3, 1);
  data << 1.0, 10.0, 6.0;
  const auto q = som_quality(grid, data);
  CHECK(q.quantization_error == doctest::Approx(2.0 / 3.0));
  // 1 -> best 0, second 2 (not adjacent); 10 -> 1, 2 adjacent; 6 -> 2, 1 adjacent.
  CHECK(q.topographic_error == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(som_quality(grid, Matrix(0, 1)), DataError);
}

TEST_CASE("training lowers quantization error and is seed-deterministic") {
  const Matrix data = random_matrix(400, 3, 2);
  TrainingSchedule s;
  s.total_steps = 4000;
  s.seed = 9;
  const auto init = som_init({5, 5}, data, 9);
  const auto a = som_train(init, data, s);
  const auto b = som_train(init, data, s);
  CHECK((a.grid.codes.array() == b.grid.codes.array()).all());
  CHECK(som_quality(a.grid, data).quantization_error < som_quality(init, data).quantization_error);
  CHECK(a.log.front().step == 0);
  CHECK(a.log.back().step == 4000);
}

TEST_CASE("model and assignment text round-trip bit for bit") {
  const Matrix data = random_matrix(50, 3, 4);
  TrainingSchedule s;
  s.total_steps = 500;
  auto model = som_train(som_init({2, 3}, data, 1), data, s);
  model.standardizer = Standardizer::fit(data);
  const auto text = write_som_model(model);
  const auto back = read_som_model(text);
  CHECK((back.grid.codes.array() == model.grid.codes.array()).all());
  CHECK(write_som_model(back) == text);

  const auto a = som_classify(model.grid, data);
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("p" + std::to_string(i));
  const auto a_text = write_assignment(ids, a);
  CHECK(read_assignment(a_text).unit == a.unit);
  CHECK_THROWS_AS(read_som_model("not a model"), DataError);
}
