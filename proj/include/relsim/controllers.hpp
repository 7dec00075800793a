#pragma once

// Controllers c(x, y) and the oracles built from them: the composite
// controller that races N perturbed instances, and an out-of-process oracle
// speaking a line protocol over standard streams.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "relsim/errors.hpp"
#include "relsim/oracle.hpp"
#include "relsim/rng.hpp"
#include "relsim/statespace.hpp"

namespace relsim {

struct ControlResult {
  std::vector<double> u;
  /// The solver's own success criterion (exitflag 1).
  bool success = false;
};

/// c(x, y): x prescribes the constraints, y seeds the warm start. The
/// one-argument controller is c(x) = c(x, x).
class TwoArgController {
 public:
  virtual ~TwoArgController() = default;
  virtual ControlResult solve(const StatePoint& x, const StatePoint& warm_start) = 0;
  ControlResult solve(const StatePoint& x) { return solve(x, x); }

  virtual OracleConcurrency concurrency() const = 0;
  virtual std::unique_ptr<TwoArgController> replicate() const = 0;
  virtual std::string name() const = 0;
};

/// F(x) = 1 iff the controller succeeds at (x, x); the pair form F(x, y)
/// solves at (x, y).
class ControllerOracle final : public ReliabilityOracle {
 public:
  explicit ControllerOracle(std::unique_ptr<TwoArgController> controller);

  OracleConcurrency concurrency() const override { return controller_->concurrency(); }
  std::unique_ptr<ReliabilityOracle> replicate() const override;
  std::string name() const override { return controller_->name(); }
  bool has_pair_form() const override { return true; }

 protected:
  bool evaluate(const StatePoint& x) override { return controller_->solve(x, x).success; }
  bool evaluate_pair(const StatePoint& x, const StatePoint& y) override {
    return controller_->solve(x, y).success;
  }

 private:
  std::unique_ptr<TwoArgController> controller_;
};

// ---- composite controller ------------------------------------------------------

/// (a) instance k solves c(y_k, y_k) at a perturbed state; (b) instance k
/// solves c(x, y_k), perturbing only the warm start.
enum class CompositeStrategy { PerturbState, PerturbGuess };

std::string_view to_string(CompositeStrategy s);
/// Accepts "perturb_state"/"a" and "perturb_guess"/"b".
CompositeStrategy parse_composite_strategy(std::string_view name);

struct CompositeConfig {
  std::size_t threads = 3;
  PerturbationRadii radii;
  CompositeStrategy strategy = CompositeStrategy::PerturbGuess;
  /// Run the instances on their own threads. Selection is by index either way.
  bool concurrent = false;
};

/// All instances of a composite evaluation crashed.
class CompositeError : public OracleError {
 public:
  using OracleError::OracleError;
};

struct CompositeResult {
  std::vector<double> u;
  /// 1-based index of the instance whose control is returned.
  std::size_t chosen = 0;
  /// Per instance: 1 success, 0 failure, -1 crash.
  std::vector<int> flags;
  std::size_t crashes = 0;
  bool success() const;
};

class CompositeController {
 public:
  /// Throws ConfigError for fewer than two threads or radii that do not fit
  /// the space.
  CompositeController(const TwoArgController& base, StateSpace space, CompositeConfig config);
  CompositeController(const CompositeController& other);

  /// Instance 1 sees x unperturbed; instance k > 1 draws its perturbation
  /// from rng.substream(k), so the result is a deterministic function of
  /// (x, rng) whatever the execution order. Returns the smallest-index
  /// success, otherwise instance N. When instance N crashed the largest-index
  /// instance that did not crash is returned instead; if every instance
  /// crashed, CompositeError is thrown.
  CompositeResult evaluate(const StatePoint& x, const RandomStream& rng);

  const CompositeConfig& config() const noexcept { return config_; }
  const StateSpace& space() const noexcept { return space_; }
  std::string base_name() const { return instances_.front()->name(); }

 private:
  StateSpace space_;
  CompositeConfig config_;
  std::vector<std::unique_ptr<TwoArgController>> instances_;
};

/// F(x) = 1 iff some instance of the composite succeeds. The perturbation
/// stream is derived from (seed, bits of x), which makes F a fixed function.
class CompositeOracle final : public ReliabilityOracle {
 public:
  CompositeOracle(CompositeController controller, std::uint64_t seed);

  OracleConcurrency concurrency() const override { return OracleConcurrency::ReplicatePerWorker; }
  std::unique_ptr<ReliabilityOracle> replicate() const override;
  std::string name() const override { return "composite(" + controller_.base_name() + ")"; }

  /// Full audit record for x, drawn on the same stream F uses.
  CompositeResult inspect(const StatePoint& x);
  std::uint64_t crashes() const noexcept { return crashes_; }

 protected:
  bool evaluate(const StatePoint& x) override;

 private:
  RandomStream stream_for(const StatePoint& x) const;

  CompositeController controller_;
  std::uint64_t seed_;
  std::uint64_t crashes_ = 0;
};

/// Stable 64-bit hash of the coordinates' bit patterns.
std::uint64_t hash_point(const StatePoint& x);

// ---- line protocol --------------------------------------------------------------

/// One request line: space-separated coordinates printed with %.17g.
std::string format_request(const StatePoint& x);
/// Parses a request line of exactly `dim` finite decimals; ProtocolError otherwise.
StatePoint parse_request(std::string_view line, std::size_t dim);
/// Accepts exactly "0" or "1" (a trailing '\r' is tolerated).
bool parse_response(std::string_view line);

/// Answers requests from `in` with `oracle` until end of input. Returns the
/// number of requests served. Malformed requests raise ProtocolError.
std::uint64_t serve_oracle(ReliabilityOracle& oracle, std::size_t dim, std::istream& in, std::ostream& out);

/// Oracle evaluated by a child process speaking the line protocol. The child
/// is started on first use; each replica owns its own child.
class ExternalProcessOracle final : public ReliabilityOracle {
 public:
  /// argv[0] is looked up on PATH.
  explicit ExternalProcessOracle(std::vector<std::string> argv);
  ~ExternalProcessOracle() override;
  ExternalProcessOracle(const ExternalProcessOracle&) = delete;
  ExternalProcessOracle& operator=(const ExternalProcessOracle&) = delete;

  OracleConcurrency concurrency() const override { return OracleConcurrency::ReplicatePerWorker; }
  std::unique_ptr<ReliabilityOracle> replicate() const override;
  std::string name() const override { return "external"; }

 protected:
  bool evaluate(const StatePoint& x) override;

 private:
  void start();
  void stop() noexcept;
  std::string read_line();

  std::vector<std::string> argv_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace relsim
