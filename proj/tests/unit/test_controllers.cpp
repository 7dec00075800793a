#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "relsim/controllers.hpp"
#include "relsim/errors.hpp"
#include "relsim/examples/vdp.hpp"

using namespace relsim;

namespace {

StateSpace square(double half) {
  return StateSpace({{"x", IntervalBlock{{{-half, half}, {-half, half}}}}});
}

/// Controller whose outcome is a fixed function of (x, y). The control it
/// returns is y's first coordinate, which identifies the instance's warm start.
class ScriptedController final : public TwoArgController {
 public:
  using Rule = std::function<int(const StatePoint&, const StatePoint&)>;  // 1, 0, or -1 to throw
  explicit ScriptedController(Rule rule) : rule_(std::move(rule)) {}

  ControlResult solve(const StatePoint& x, const StatePoint& y) override {
    const int r = rule_(x, y);
    if (r < 0) throw std::runtime_error("scripted crash");
    return ControlResult{{y[0]}, r == 1};
  }
  using TwoArgController::solve;
  OracleConcurrency concurrency() const override { return OracleConcurrency::ConcurrentSafe; }
  std::unique_ptr<TwoArgController> replicate() const override {
    return std::make_unique<ScriptedController>(rule_);
  }
  std::string name() const override { return "scripted"; }

 private:
  Rule rule_;
};

CompositeConfig config(std::size_t n, double r, CompositeStrategy s) {
  return CompositeConfig{n, PerturbationRadii{{r}}, s, false};
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_composite_strategy("a") == CompositeStrategy::PerturbState);
  CHECK(parse_composite_strategy("perturb_state") == CompositeStrategy::PerturbState);
  CHECK(parse_composite_strategy("b") == CompositeStrategy::PerturbGuess);
  CHECK(parse_composite_strategy(to_string(CompositeStrategy::PerturbGuess)) == CompositeStrategy::PerturbGuess);
  CHECK_THROWS_AS(parse_composite_strategy("c"), ConfigError);
}

TEST_CASE("composite returns the first success") {
  const auto space = square(8.0);
  ScriptedController always([](const StatePoint&, const StatePoint&) { return 1; });
  CompositeController c(always, space, config(3, 0.5, CompositeStrategy::PerturbGuess));
  const StatePoint x({1.0, 2.0});
  const auto r = c.evaluate(x, RandomStream(5));
  CHECK(r.chosen == 1);
  CHECK(r.success());
  REQUIRE(r.u.size() == 1);
  CHECK(r.u[0] == 1.0);  // instance 1 sees x unperturbed

  // Only instance 2 succeeds: identify it by its warm start.
  int calls = 0;
  ScriptedController second([&calls](const StatePoint&, const StatePoint&) { return ++calls == 2 ? 1 : 0; });
  CompositeController c2(second, space, config(3, 0.5, CompositeStrategy::PerturbGuess));
  const auto r2 = c2.evaluate(x, RandomStream(5));
  CHECK(r2.chosen == 2);
  CHECK(r2.flags == std::vector<int>{0, 1, 0});
}

TEST_CASE("composite with no success returns instance N") {
  const auto space = square(8.0);
  ScriptedController never([](const StatePoint&, const StatePoint&) { return 0; });
  CompositeController c(never, space, config(4, 0.5, CompositeStrategy::PerturbState));
  const auto r = c.evaluate(StatePoint({0.0, 0.0}), RandomStream(9));
  CHECK(r.chosen == 4);
  CHECK_FALSE(r.success());
  CHECK(r.crashes == 0);
}

TEST_CASE("zero radii make every instance identical") {
  const auto space = square(8.0);
  std::vector<StatePoint> seen;
  ScriptedController record([&seen](const StatePoint& x, const StatePoint& y) {
    seen.push_back(y);
    return x == y ? 1 : 0;
  });
  CompositeController c(record, space, config(3, 0.0, CompositeStrategy::PerturbGuess));
  const StatePoint x({-3.0, 4.0});
  const auto r = c.evaluate(x, RandomStream(1));
  CHECK(r.chosen == 1);
  for (const auto& y : seen) CHECK(y == x);
}

TEST_CASE("strategies pass different arguments") {
  const auto space = square(8.0);
  const StatePoint x({1.0, 1.0});
  std::vector<std::pair<StatePoint, StatePoint>> calls;
  ScriptedController record([&calls](const StatePoint& a, const StatePoint& b) {
    calls.emplace_back(a, b);
    return 0;
  });
  CompositeController a(record, space, config(3, 0.5, CompositeStrategy::PerturbState));
  a.evaluate(x, RandomStream(3));
  REQUIRE(calls.size() == 3);
  for (const auto& [s, w] : calls) CHECK(s == w);
  CHECK_FALSE(calls[1].first == x);

  calls.clear();
  CompositeController b(record, space, config(3, 0.5, CompositeStrategy::PerturbGuess));
  b.evaluate(x, RandomStream(3));
  REQUIRE(calls.size() == 3);
  for (const auto& [s, w] : calls) CHECK(s == x);
  CHECK_FALSE(calls[2].second == x);
}

TEST_CASE("crashes are not failures") {
  const auto space = square(8.0);
  int calls = 0;
  ScriptedController last_crashes([&calls](const StatePoint&, const StatePoint&) { return ++calls == 3 ? -1 : 0; });
  CompositeController c(last_crashes, space, config(3, 0.5, CompositeStrategy::PerturbGuess));
  const auto r = c.evaluate(StatePoint({0.0, 0.0}), RandomStream(2));
  CHECK(r.crashes == 1);
  CHECK(r.chosen == 2);
  CHECK(r.flags == std::vector<int>{0, 0, -1});

  ScriptedController all_crash([](const StatePoint&, const StatePoint&) { return -1; });
  CompositeController d(all_crash, space, config(3, 0.5, CompositeStrategy::PerturbGuess));
  CHECK_THROWS_AS(d.evaluate(StatePoint({0.0, 0.0}), RandomStream(2)), CompositeError);

  CompositeOracle oracle(CompositeController(all_crash, space, config(2, 0.5, CompositeStrategy::PerturbGuess)), 1);
  CHECK_THROWS_AS(oracle(StatePoint({0.0, 0.0})), OracleError);
}

TEST_CASE("composite configuration errors") {
  const auto space = square(8.0);
  ScriptedController ok([](const StatePoint&, const StatePoint&) { return 1; });
  CHECK_THROWS_AS(CompositeController(ok, space, config(1, 0.5, CompositeStrategy::PerturbGuess)), ConfigError);
  CHECK_THROWS_AS(CompositeController(ok, space, CompositeConfig{3, PerturbationRadii{{0.1, 0.2}},
                                                                 CompositeStrategy::PerturbGuess, false}),
                  ConfigError);
}

TEST_CASE("composite oracle is a fixed function of the state") {
  const auto space = square(8.0);
  // Succeeds only for warm starts in the right half plane.
  ScriptedController rule([](const StatePoint&, const StatePoint& y) { return y[0] > 0.0 ? 1 : 0; });
  CompositeOracle f(CompositeController(rule, space, config(3, 1.0, CompositeStrategy::PerturbGuess)), 11);
  auto g = f.replicate();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const StatePoint x({u(gen), u(gen)});
    const bool a = f(x);
    CHECK(a == f(x));
    CHECK(a == (*g)(x));
    CHECK(a == f.inspect(x).success());
  }
  CHECK(hash_point(StatePoint({0.0, 1.0})) == hash_point(StatePoint({-0.0, 1.0})));
  CHECK(hash_point(StatePoint({0.0, 1.0})) != hash_point(StatePoint({1.0, 0.0})));
}

TEST_CASE("concurrent instances select the same control as sequential ones") {
  const auto space = square(8.0);
  ScriptedController rule([](const StatePoint&, const StatePoint& y) { return y[1] > 0.3 ? 1 : 0; });
  auto seq = config(4, 1.0, CompositeStrategy::PerturbGuess);
  auto par = seq;
  par.concurrent = true;
  CompositeController a(rule, space, seq);
  CompositeController b(rule, space, par);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const StatePoint x({0.1 * static_cast<double>(s % 7), 0.0});
    const auto ra = a.evaluate(x, RandomStream(s));
    const auto rb = b.evaluate(x, RandomStream(s));
    CHECK(ra.chosen == rb.chosen);
    CHECK(ra.u == rb.u);
  }
}

TEST_CASE("composite dominates the base vdp controller") {
  const VdpProblem p;
  const auto space = vdp_statespace(p);
  VdpController base(p);
  CompositeOracle composite(
      CompositeController(base, space, CompositeConfig{3, PerturbationRadii{{0.15, 0.15}}, CompositeStrategy::PerturbGuess, false}),
      4);
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-p.box, p.box);
  for (int i = 0; i < 300; ++i) {
    const StatePoint x({u(gen), u(gen)});
    if (base.solve(x).success) CHECK(composite(x));
  }
}

TEST_CASE("request lines") {
  const StatePoint x({0.1, -1e-300, 3.0, 12345.678901234567});
  const auto line = format_request(x);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(parse_request(line, 4) == x);
  CHECK(parse_request("  1  2 3 ", 3) == StatePoint({1.0, 2.0, 3.0}));
  CHECK_THROWS_AS(parse_request("1\t2 3", 3), ProtocolError);
  CHECK_THROWS_AS(parse_request("1 2", 3), ProtocolError);
  CHECK_THROWS_AS(parse_request("1 2 x", 3), ProtocolError);
  CHECK_THROWS_AS(parse_request("1 2 nan", 3), ProtocolError);
  CHECK_THROWS_AS(parse_request("1 2 3 4", 3), ProtocolError);
}

TEST_CASE("response lines") {
  CHECK(parse_response("1"));
  CHECK_FALSE(parse_response("0"));
  CHECK(parse_response("1\r"));
  for (const char* bad : {"", "2", " 1", "1 ", "01", "true"}) {
    CHECK_THROWS_AS(parse_response(bad), ProtocolError);
  }
}

TEST_CASE("serve loop") {
  FunctionOracle f([](const StatePoint& x) { return x[0] > 0.0; }, OracleConcurrency::ConcurrentSafe);
  std::istringstream in("0.5 1\n-0.5 1\n2 2\n");
  std::ostringstream out;
  CHECK(serve_oracle(f, 2, in, out) == 3);
  CHECK(out.str() == "1\n0\n1\n");

  std::istringstream empty("");
  std::ostringstream none;
  CHECK(serve_oracle(f, 2, empty, none) == 0);
  CHECK(none.str().empty());

  std::istringstream bad("0.5 1\n0.5\n");
  std::ostringstream partial;
  CHECK_THROWS_AS(serve_oracle(f, 2, bad, partial), ProtocolError);
}

TEST_CASE("external process oracle") {
  ExternalProcessOracle echo({"sh", "-c", "while read a b; do case $a in -*) echo 0;; *) echo 1;; esac; done"});
  CHECK(echo(StatePoint({1.0, 2.0})));
  CHECK_FALSE(echo(StatePoint({-1.0, 2.0})));
  auto replica = echo.replicate();
  CHECK((*replica)(StatePoint({3.0, 0.0})));
  CHECK(echo.calls() == 2);

  ExternalProcessOracle malformed({"sh", "-c", "read line; echo maybe"});
  CHECK_THROWS_AS(malformed(StatePoint({1.0})), ProtocolError);

  ExternalProcessOracle silent({"sh", "-c", "exit 0"});
  CHECK_THROWS_AS(silent(StatePoint({1.0})), OracleError);

  ExternalProcessOracle missing({"relsim-no-such-program-xyz"});
  CHECK_THROWS_AS(missing(StatePoint({1.0})), OracleError);

  CHECK_THROWS_AS(ExternalProcessOracle({}), ConfigError);
}
