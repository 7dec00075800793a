#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "relsim/chain.hpp"
#include "relsim/errors.hpp"
#include "support/reference.hpp"

using namespace relsim;

namespace {

StateSpace square(double half) {
  return StateSpace({{"x", IntervalBlock{{{-half, half}, {-half, half}}}}});
}

ChainModel model(ModelKind kind, std::size_t n, double r) {
  return ChainModel{kind, n, PerturbationRadii{{r}}};
}

class ThrowingOracle final : public ReliabilityOracle {
 public:
  OracleConcurrency concurrency() const override { return OracleConcurrency::ConcurrentSafe; }
  std::unique_ptr<ReliabilityOracle> replicate() const override { return std::make_unique<ThrowingOracle>(); }
  std::string name() const override { return "throwing"; }

 protected:
  bool evaluate(const StatePoint&) override { throw std::runtime_error("solver crashed"); }
};

}  // namespace

TEST_CASE("model kind names round-trip") {
  for (auto k : {ModelKind::LatencyBudget, ModelKind::ConcurrentDesign}) {
    CHECK(parse_model_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_model_kind("star"), ConfigError);
  const auto s = square(1.0);
  CHECK_THROWS_AS(model(ModelKind::LatencyBudget, 0, 0.1).validate(s), ConfigError);
}

TEST_CASE("extend with zero radius returns the anchor") {
  const auto s = square(8.0);
  RandomStream rng(1);
  const Prefix p{StatePoint({1.0, 2.0}), StatePoint({3.0, 4.0})};
  CHECK(extend(model(ModelKind::LatencyBudget, 3, 0.0), s, p, rng) == p[1]);
  CHECK(extend(model(ModelKind::ConcurrentDesign, 3, 0.0), s, p, rng) == p[0]);
}

TEST_CASE("concurrent extend depends only on the first state") {
  const auto s = square(8.0);
  const auto m = model(ModelKind::ConcurrentDesign, 4, 0.5);
  Prefix a{StatePoint({1.0, 2.0}), StatePoint({3.0, 4.0}), StatePoint({-3.0, 0.0})};
  Prefix b{StatePoint({1.0, 2.0}), StatePoint({7.0, -7.0}), StatePoint({0.5, 0.5})};
  RandomStream r1(2);
  RandomStream r2(2);
  CHECK(extend(m, s, a, r1) == extend(m, s, b, r2));
}

TEST_CASE("latency extend stays within r_p of the last state unless reflected") {
  const auto s = square(8.0);
  const auto m = model(ModelKind::LatencyBudget, 2, 0.15);
  RandomStream rng(3);
  for (int i = 0; i < 10'000; ++i) {
    const StatePoint x = sample_uniform(s, rng);
    const StatePoint y = extend(m, s, Prefix{x}, rng);
    for (std::size_t d = 0; d < 2; ++d) {
      const bool near_wall = std::abs(x[d]) > 8.0 - 0.15;
      if (!near_wall) CHECK(std::abs(y[d] - x[d]) <= 0.15);
      CHECK(std::abs(y[d]) <= 8.0);
    }
  }
}

TEST_CASE("failure indicator with constant oracles") {
  const auto s = square(1.0);
  ConstantOracle good(true);
  ConstantOracle bad(false);
  RandomStream rng(4);
  for (auto kind : {ModelKind::LatencyBudget, ModelKind::ConcurrentDesign}) {
    const auto m = model(kind, 3, 0.1);
    for (int i = 0; i < 20; ++i) {
      const auto x = sample_uniform(s, rng);
      CHECK_FALSE(simulate_failure_indicator(m, s, good, x, rng).failed);
      CHECK(simulate_failure_indicator(m, s, bad, x, rng).failed);
    }
  }
}

TEST_CASE("oracle crashes surface as OracleError") {
  const auto s = square(1.0);
  ThrowingOracle oracle;
  RandomStream rng(5);
  CHECK_THROWS_AS(simulate_failure_indicator(model(ModelKind::LatencyBudget, 2, 0.1), s, oracle,
                                             StatePoint({0.0, 0.0}), rng),
                  OracleError);
}

TEST_CASE("short-circuit never changes the indicator") {
  const auto s = square(1.0);
  auto ball = ball_oracle(s, {0.0, 0.0}, 0.5);
  RandomStream rng(6);
  for (auto kind : {ModelKind::LatencyBudget, ModelKind::ConcurrentDesign}) {
    const auto m = model(kind, 4, 0.3);
    for (int i = 0; i < 5000; ++i) {
      const auto x = sample_uniform(s, rng);
      RandomStream a = rng.substream(i);
      RandomStream b = rng.substream(i);
      // Full trajectory on stream b gives the reference indicator.
      const Trajectory t = simulate_trajectory(m, s, ball, x, b);
      bool all = true;
      for (auto f : t.flags) all = all && f == 0;
      IndicatorOptions sc;
      sc.short_circuit = true;
      CHECK(simulate_failure_indicator(m, s, ball, x, a, sc).failed == all);
    }
  }
}

TEST_CASE("indicator is monotone in chain length on a shared stream") {
  const auto s = square(1.0);
  auto ball = ball_oracle(s, {0.0, 0.0}, 0.5);
  RandomStream rng(7);
  IndicatorOptions full;
  full.short_circuit = false;
  for (int i = 0; i < 5000; ++i) {
    const auto x = sample_uniform(s, rng);
    RandomStream a = rng.substream(i);
    RandomStream b = rng.substream(i);
    const bool longer = simulate_failure_indicator(model(ModelKind::LatencyBudget, 4, 0.2), s, ball, x, a, full).failed;
    const bool shorter = simulate_failure_indicator(model(ModelKind::LatencyBudget, 3, 0.2), s, ball, x, b, full).failed;
    CHECK(longer <= shorter);
  }
}

TEST_CASE("N = 1 models coincide") {
  const auto s = square(1.0);
  auto ball = ball_oracle(s, {0.0, 0.0}, 0.5);
  RandomStream rng(8);
  for (int i = 0; i < 1000; ++i) {
    const auto x = sample_uniform(s, rng);
    RandomStream a(9, i);
    RandomStream b(9, i);
    CHECK(simulate_failure_indicator(model(ModelKind::LatencyBudget, 1, 0.2), s, ball, x, a).failed ==
          simulate_failure_indicator(model(ModelKind::ConcurrentDesign, 1, 0.2), s, ball, x, b).failed);
  }
}

TEST_CASE("two-step indicator agrees with the brute-force simulator") {
  const auto s = square(1.0);
  auto ball = ball_oracle(s, {0.0, 0.0}, 0.3);
  const auto m = model(ModelKind::LatencyBudget, 2, 0.05);
  RandomStream rng(10);
  const std::uint64_t n = 1'000'000;
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto x = sample_uniform(s, rng);
    hits += simulate_failure_indicator(m, s, ball, x, rng).failed ? 1 : 0;
  }
  reference::BallWorld w{{-1.0, -1.0}, {1.0, 1.0}, {{0.0, 0.0}}, 0.3};
  const std::uint64_t ref = reference::brute_force_chains(w, reference::Chain::Latency, 2, {0.05, 0.05}, n, 99);
  const double p1 = static_cast<double>(hits) / n;
  const double p2 = static_cast<double>(ref) / n;
  const double sd = std::sqrt(p1 * (1 - p1) / n + p2 * (1 - p2) / n);
  CHECK(std::abs(p1 - p2) < 3.0 * sd);
}
