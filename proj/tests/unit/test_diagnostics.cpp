#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "relsim/diagnostics.hpp"
#include "relsim/errors.hpp"

using namespace relsim;

namespace {

StateSpace quad_like() {
  return StateSpace({{"p", IntervalBlock{{{-5, 5}, {-5, 5}, {-5, 5}}}}, {"q", SphereBlock{3}}});
}

}  // namespace

TEST_CASE("make_pilots: count, range and determinism") {
  const auto s = quad_like();
  RandomStream a(1);
  RandomStream b(1);
  const auto p = make_pilots(s, 5, a);
  const auto q = make_pilots(s, 5, b);
  REQUIRE(p.size() == 5);
  const StatePoint x = sample_uniform(s, a);
  for (std::size_t l = 0; l < 5; ++l) {
    CHECK(p[l](x) == q[l](x));
    CHECK(p[l].coefficients().size() == s.dim());
    for (double c : p[l].coefficients()) {
      CHECK(c > -10.0);
      CHECK(c < 10.0);
    }
  }
  CHECK_THROWS_AS(make_pilots(s, 0, a), std::invalid_argument);
  RandomStream c(2);
  const auto poly = make_pilots(s, 3, c, PilotBasis::Polynomial);
  CHECK(poly.front().basis() == PilotBasis::Polynomial);
}

TEST_CASE("pilot evaluation") {
  PilotFunction trig(PilotBasis::Trig, {2.0, -1.0}, {}, {1, 0});
  const std::vector<double> x{0.5, 0.25};
  CHECK(trig(x) == doctest::Approx(2.0 * std::sin(0.5) - std::cos(0.25)));
  PilotFunction poly(PilotBasis::Polynomial, {1.0, 2.0}, {3.0, 0.0});
  CHECK(poly(x) == doctest::Approx(0.5 + 3.0 * 0.25 + 2.0 * 0.25));
  PilotFunction zero(PilotBasis::Trig, {0.0, 0.0});
  CHECK(zero(x) == 0.0);
  CHECK_THROWS_AS(trig(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("pilot means") {
  PilotFunction f(PilotBasis::Polynomial, {1.0}, {0.0});
  const std::vector<PilotFunction> pilots{f};
  const std::vector<StatePoint> one{StatePoint({3.0})};
  CHECK(pilot_means(pilots, one)[0] == 3.0);
  const std::vector<StatePoint> sample{StatePoint({1.0}), StatePoint({2.0}), StatePoint({6.0})};
  const std::vector<StatePoint> twice{StatePoint({1.0}), StatePoint({2.0}), StatePoint({6.0}),
                                      StatePoint({1.0}), StatePoint({2.0}), StatePoint({6.0})};
  CHECK(pilot_means(pilots, sample)[0] == pilot_means(pilots, twice)[0]);
  CHECK_THROWS_AS(pilot_means(pilots, std::vector<StatePoint>{}), std::invalid_argument);
}

TEST_CASE("compare verdicts") {
  const auto s = quad_like();
  RandomStream rng(3);
  const auto pilots = make_pilots(s, 5, rng);
  PilotAccumulator honest(pilots);
  std::vector<StatePoint> sample;
  for (int i = 0; i < 200; ++i) sample.push_back(sample_uniform(s, rng));
  for (const auto& x : sample) honest.add(x);

  SUBCASE("identical sample passes") {
    const auto r = compare(honest.moments(), pilot_means(pilots, sample), sample.size(), 0.99);
    CHECK(r.pass);
    CHECK(r.pilots.size() == 5);
    CHECK(r.honest_count == 200);
  }
  SUBCASE("a displaced sample fails") {
    std::vector<double> shifted = honest.means();
    for (double& m : shifted) m += 100.0;
    const auto r = compare(honest.moments(), shifted, 1000, 0.99);
    CHECK_FALSE(r.pass);
  }
  SUBCASE("needs 30 honest samples") {
    PilotAccumulator few(pilots);
    for (int i = 0; i < 29; ++i) few.add(sample[i]);
    CHECK_THROWS_AS(compare(few.moments(), few.means(), 29, 0.99), std::invalid_argument);
  }
  SUBCASE("merge equals joint accumulation") {
    PilotAccumulator a(pilots);
    PilotAccumulator b(pilots);
    for (std::size_t i = 0; i < sample.size(); ++i) (i < 77 ? a : b).add(sample[i]);
    a.merge(b);
    for (std::size_t l = 0; l < pilots.size(); ++l) {
      CHECK(a.means()[l] == doctest::Approx(honest.means()[l]).epsilon(1e-12));
    }
  }
  CHECK(DiagnosticsResult::kLabel.find("necessary but not sufficient") != std::string_view::npos);
}

TEST_CASE("basis names round-trip") {
  CHECK(parse_pilot_basis(to_string(PilotBasis::Trig)) == PilotBasis::Trig);
  CHECK(parse_pilot_basis(to_string(PilotBasis::Polynomial)) == PilotBasis::Polynomial);
  CHECK_THROWS_AS(parse_pilot_basis("fourier"), ConfigError);
}
