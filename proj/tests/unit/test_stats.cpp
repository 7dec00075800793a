#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "relsim/rng.hpp"
#include "relsim/stats.hpp"

using namespace relsim;

TEST_CASE("welford small sequences") {
  WelfordAccumulator a;
  for (double x : {1.0, 1.0, 1.0}) a.add(x);
  CHECK(a.mean == 1.0);
  CHECK(a.sample_variance() == 0.0);

  WelfordAccumulator b;
  b = welford_update(b, 0.0);
  b = welford_update(b, 1.0);
  CHECK(b.mean == 0.5);
  CHECK(b.sample_variance() == 0.5);
  CHECK(b.population_variance() == 0.25);
}

TEST_CASE("welford on uniform draws") {
  RandomStream rng(1);
  WelfordAccumulator a;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) a.add(rng.uniform01());
  CHECK(std::abs(a.mean - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(a.sample_variance() - 1.0 / 12.0) < 0.05 / 12.0);
}

TEST_CASE("welford merge equals sequential accumulation") {
  RandomStream rng(2);
  WelfordAccumulator all;
  WelfordAccumulator left;
  WelfordAccumulator right;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-3.0, 5.0);
    all.add(x);
    (i < 370 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.count == all.count);
  CHECK(left.mean == doctest::Approx(all.mean).epsilon(1e-13));
  CHECK(left.sample_variance() == doctest::Approx(all.sample_variance()).epsilon(1e-12));
  WelfordAccumulator empty;
  empty.merge(all);
  CHECK(empty.mean == all.mean);
}

TEST_CASE("quantiles match tabulated values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(1.0 - 5e-7) == doctest::Approx(4.891638475671085).epsilon(1e-10));
  CHECK(student_t_quantile(1.0 - 5e-7, 30.0) == doctest::Approx(6.119075620334125).epsilon(1e-9));
  CHECK(student_t_quantile(0.975, 29.0) == doctest::Approx(2.045229642132703).epsilon(1e-10));
}

TEST_CASE("student-t interval") {
  const auto ci = student_t_interval(5.74e-5, 2.65e-9, 31, 1.0 - 1e-6);
  CHECK(std::abs(ci.hi - 1.14e-4) / 1.14e-4 < 0.01);
  CHECK(ci.lo == doctest::Approx(8.2456e-7).epsilon(1e-3));
  CHECK(student_t_interval(1e-3, 1e-4, 5, 0.99).lo == 0.0);  // clipped

  const std::vector<double> same{0.25, 0.25, 0.25, 0.25};
  const auto flat = student_t_interval(same, 0.99);
  CHECK(flat.lo == 0.25);
  CHECK(flat.hi == 0.25);

  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(student_t_interval(one, 0.99), std::invalid_argument);

  const std::vector<double> means{0.1, 0.2, 0.15, 0.12};
  const auto narrow = student_t_interval(means, 0.9);
  const auto wide = student_t_interval(means, 0.99);
  CHECK(wide.lo < narrow.lo);
  CHECK(wide.hi > narrow.hi);
}

TEST_CASE("student-t interval coverage on Gaussian batch means") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g(0.4, 0.05);
  const int reps = 10'000;
  const double conf = 0.95;
  int covered = 0;
  std::vector<double> means(10);
  for (int r = 0; r < reps; ++r) {
    for (double& m : means) m = g(gen);
    const auto ci = student_t_interval(means, conf);
    covered += (ci.lo <= 0.4 && 0.4 <= ci.hi) ? 1 : 0;
  }
  CHECK(static_cast<double>(covered) / reps >= conf - 0.01);
}

TEST_CASE("normal and clopper-pearson intervals") {
  const auto n = normal_interval(0.0, 0.0, 1000, 0.99);
  CHECK(n.lo == 0.0);
  CHECK(n.hi == 0.0);
  CHECK_THROWS_AS(normal_interval(0.5, 0.25, 0, 0.99), std::invalid_argument);
  CHECK_THROWS_AS(normal_interval(0.5, 0.25, 10, 1.0), std::invalid_argument);

  const auto zero = clopper_pearson_interval(0, 1000, 0.99);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == doctest::Approx(0.0052843).epsilon(1e-4));
  const auto five = clopper_pearson_interval(5, 1000, 0.99);
  CHECK(five.lo == doctest::Approx(0.0010795).epsilon(1e-4));
  CHECK(five.hi == doctest::Approx(0.014085).epsilon(1e-4));
}

TEST_CASE("batch moments") {
  const std::vector<double> v{1.0, 2.0, 3.0};
  const auto m = batch_moments(v);
  CHECK(m.mean == 2.0);
  CHECK(m.variance == 1.0);
}
