#include <doctest.h>

#include <cmath>
#include <random>

#include "../common/oracles.hpp"
#include "tropfact/metrics.hpp"

using namespace tropfact;

namespace {

Trajectory make_traj(std::vector<std::pair<double, double>> points) {
  Trajectory t;
  t.clock = BudgetClock::Sweeps;
  for (auto [time, err] : points) t.samples.push_back({0.0, time, err});
  t.budget = points.back().first;
  return t;
}

}  // namespace

TEST_CASE("regular grid") {
  CHECK(regular_grid(3, 1) == std::vector<double>{0, 1, 2, 3});
  CHECK(regular_grid(2.5, 1) == std::vector<double>{0, 1, 2, 2.5});
  CHECK(regular_grid(0, 1) == std::vector<double>{0});
  CHECK_THROWS_AS(regular_grid(3, 0), std::invalid_argument);
}

TEST_CASE("normalized error") {
  const Trajectory base = make_traj({{0, 10}, {1, 6}, {2.5, 4}, {4, 2}});
  const auto grid = regular_grid(4, 1);
  const auto self = normalized_error(base, base, grid);
  CHECK(self.front() == 1.0);
  CHECK(self.back() == 0.0);
  for (double x : self) CHECK((x >= 0.0 && x <= 1.0));
  CHECK(self[2] == doctest::Approx((6.0 - 2.0) / 8.0));  // step value at t = 2

  const Trajectory better = make_traj({{0, 10}, {1, 1}});
  CHECK(normalized_error_at(better, base, 4) < 0.0);
  CHECK(normalized_error_at(better, base, 0) == 1.0);

  const Trajectory flat = make_traj({{0, 3}, {5, 3}});
  CHECK_THROWS_AS(normalized_error(better, flat, grid), std::invalid_argument);
}

TEST_CASE("rmse") {
  const Matrix truth = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(rmse(truth, truth, std::vector<std::uint8_t>{1, 1, 1, 1}) == 0.0);
  const Matrix pred = Matrix::from_rows({{4, 2}, {3, 0}});
  CHECK(rmse(pred, truth, std::vector<std::uint8_t>{1, 0, 0, 1}) ==
        doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));

  std::mt19937_64 rng(1);
  std::bernoulli_distribution keep(0.5);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = oracle::random_matrix(5, 4, rng), b = oracle::random_matrix(5, 4, rng);
    std::vector<std::uint8_t> mask(20);
    for (auto& x : mask) x = keep(rng);
    mask[0] = 1;
    double s = 0;
    int c = 0;
    for (std::size_t p = 0; p < 20; ++p)
      if (mask[p]) {
        s += (a.data()[p] - b.data()[p]) * (a.data()[p] - b.data()[p]);
        ++c;
      }
    CHECK(std::fabs(rmse(a, b, mask) - std::sqrt(s / c)) <= 1e-12);
  }
}

TEST_CASE("distance correlation") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> x(60), y(60);
  for (auto& v : x) v = g(rng);
  CHECK(distance_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t p = 0; p < 60; ++p) y[p] = -3.0 * x[p] + 7.0;
  CHECK(distance_correlation(x, y) == doctest::Approx(1.0).epsilon(1e-10));
  std::vector<double> c(60, 4.0);
  CHECK(distance_correlation(c, x) == 0.0);

  for (std::size_t p = 0; p < 60; ++p) y[p] = x[p] * x[p] + 0.3 * g(rng);
  const double d = distance_correlation(x, y);
  CHECK(std::fabs(d - oracle::dcor(x, y)) <= 1e-10);
  CHECK(std::fabs(d - distance_correlation(y, x)) <= 1e-12);
  std::vector<double> xa(60);
  for (std::size_t p = 0; p < 60; ++p) xa[p] = 2.5 * x[p] - 1.0;
  CHECK(std::fabs(d - distance_correlation(xa, y)) <= 1e-10);
}

TEST_CASE("masked distance correlation subsamples deterministically") {
  std::mt19937_64 rng(3);
  const Matrix a = oracle::random_matrix(60, 60, rng);
  Matrix b = a;
  for (auto& x : b.data()) x = 2 * x + 1;
  std::vector<std::uint8_t> all(3600, 1);
  CHECK(masked_distance_correlation(a, b, all, 500, 1) == doctest::Approx(1.0).epsilon(1e-10));
  const Matrix c = oracle::random_matrix(60, 60, rng);
  CHECK(masked_distance_correlation(a, c, all, 500, 1) == masked_distance_correlation(a, c, all, 500, 1));
}

TEST_CASE("quantiles and bootstrap") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(quantile({0, 10}, 0.25) == 2.5);

  const std::vector<double> constant(30, 7.0);
  const Interval ci = bootstrap_ci(constant, 200, 0.95, 1);
  CHECK(ci.low == 7.0);
  CHECK(ci.high == 7.0);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(5.0, 1.0);
  std::vector<double> xs(200);
  for (auto& x : xs) x = g(rng);
  const Interval a = bootstrap_ci(xs, 2000, 0.95, 9), b = bootstrap_ci(xs, 2000, 0.95, 9);
  CHECK(a.low == b.low);
  CHECK(a.high == b.high);
  CHECK(a.low <= mean(xs));
  CHECK(mean(xs) <= a.high);
  CHECK(a.high - a.low < 0.6);
}

TEST_CASE("rank tables") {
  // Two methods tied on dataset 0, distinct on dataset 1.
  const Matrix scores = Matrix::from_rows({{1, 5}, {1, 3}, {2, 4}});
  const RankTable t = rank_methods(scores, true);
  CHECK(t.ranks(0, 0) == 1.5);
  CHECK(t.ranks(1, 0) == 1.5);
  CHECK(t.ranks(2, 0) == 3.0);
  CHECK(t.ranks(0, 1) == 3.0);
  CHECK(t.ranks(1, 1) == 1.0);
  CHECK(t.ranks(2, 1) == 2.0);
  for (std::size_t d = 0; d < 2; ++d) {
    double s = 0;
    for (std::size_t m = 0; m < 3; ++m) s += t.ranks(m, d);
    CHECK(s == 6.0);
  }
  CHECK(t.average() == std::vector<double>{2.25, 1.25, 2.5});

  const Matrix never = Matrix::from_rows({{kPosInf}, {3}, {kPosInf}, {1}});
  const RankTable n = rank_methods(never, true);
  CHECK(n.ranks(3, 0) == 1.0);
  CHECK(n.ranks(1, 0) == 2.0);
  CHECK(n.ranks(0, 0) == 3.5);
  CHECK(n.ranks(2, 0) == 3.5);

  const RankTable hi = rank_methods(Matrix::from_rows({{0.9}, {0.5}}), false);
  CHECK(hi.ranks(0, 0) == 1.0);
}

TEST_CASE("Nemenyi critical difference") {
  CHECK(nemenyi_q(2, 0.05) == doctest::Approx(1.960).epsilon(1e-3));
  CHECK(nemenyi_q(4, 0.05) == doctest::Approx(2.569).epsilon(5e-4));
  CHECK(nemenyi_q(10, 0.05) == doctest::Approx(3.164).epsilon(5e-4));
  CHECK(std::fabs(nemenyi_cd(4, 50, 0.05) - 0.663) <= 0.001);
  CHECK_THROWS_AS(nemenyi_q(1, 0.05), std::invalid_argument);
}

TEST_CASE("time to reach and omega") {
  const Trajectory t = make_traj({{0, 10}, {2, 5}, {4, 1}});
  const auto grid = regular_grid(4, 1);
  CHECK(time_to_reach(t, 1.0, grid) == 4.0);
  CHECK(time_to_reach(t, 5.0, grid) == 2.0);
  CHECK_FALSE(time_to_reach(t, 0.5, grid).has_value());

  CHECK(omega(std::vector<double>{1, 1}, std::vector<double>{2, 2}) == 1.0);
  CHECK(omega(std::vector<double>{3, 3}, std::vector<double>{2, 2}) == 0.0);
  CHECK(omega(std::vector<double>{1, 3}, std::vector<double>{2, 2}) == 0.5);
  CHECK_THROWS_AS(omega(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}
