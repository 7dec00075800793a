#pragma once

// Reliability oracles F: X -> {0, 1}. F(x) = 1 means the controller produced a
// good control at x; F(x) = 0 marks a bad one.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relsim/statespace.hpp"

namespace relsim {

enum class OracleConcurrency { ConcurrentSafe, ReplicatePerWorker };

/// Column-major block of points: column d holds coordinate d of every point.
class PointBatch {
 public:
  PointBatch(std::size_t dim, std::size_t capacity)
      : dim_(dim), capacity_(capacity), data_(dim * capacity) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return capacity_; }
  void clear() noexcept { size_ = 0; }

  void push_back(const StatePoint& x);
  StatePoint point(std::size_t i) const;
  /// Column d restricted to the filled rows.
  std::span<const double> column(std::size_t d) const {
    return std::span<const double>(data_).subspan(d * capacity_, size_);
  }

 private:
  std::size_t dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::vector<double> data_;
};

class ReliabilityOracle {
 public:
  virtual ~ReliabilityOracle() = default;

  /// F(x). Counts the call; any exception from the implementation surfaces as
  /// OracleError.
  bool operator()(const StatePoint& x);

  /// Two-argument form F(x, y) for controllers whose first argument prescribes
  /// the constraints and whose second is a warm start. Defaults to F(y).
  bool pair(const StatePoint& constraint_state, const StatePoint& warm_start);

  /// F over a batch; flags[i] = F(batch.point(i)).
  void evaluate_batch(const PointBatch& batch, std::span<std::uint8_t> flags);

  std::uint64_t calls() const noexcept { return calls_.load(std::memory_order_relaxed); }

  virtual OracleConcurrency concurrency() const = 0;
  virtual std::unique_ptr<ReliabilityOracle> replicate() const = 0;
  virtual std::string name() const = 0;
  virtual bool has_pair_form() const { return false; }

 protected:
  virtual bool evaluate(const StatePoint& x) = 0;
  virtual bool evaluate_pair(const StatePoint& /*constraint_state*/, const StatePoint& warm_start) {
    return evaluate(warm_start);
  }
  virtual void evaluate_many(const PointBatch& batch, std::span<std::uint8_t> flags);

 private:
  std::atomic<std::uint64_t> calls_{0};
};

/// Hands out one oracle per worker: the shared instance when it is
/// concurrent-safe, otherwise a replica per worker.
class OraclePool {
 public:
  OraclePool(ReliabilityOracle& prototype, std::size_t workers);
  ReliabilityOracle& for_worker(std::size_t worker);
  std::size_t size() const noexcept { return workers_; }

 private:
  ReliabilityOracle& prototype_;
  std::size_t workers_;
  std::vector<std::unique_ptr<ReliabilityOracle>> replicas_;
};

// ---- synthetic oracles -------------------------------------------------------

class ConstantOracle final : public ReliabilityOracle {
 public:
  explicit ConstantOracle(bool value) : value_(value) {}
  OracleConcurrency concurrency() const override { return OracleConcurrency::ConcurrentSafe; }
  std::unique_ptr<ReliabilityOracle> replicate() const override {
    return std::make_unique<ConstantOracle>(value_);
  }
  std::string name() const override { return value_ ? "constant-1" : "constant-0"; }

 protected:
  bool evaluate(const StatePoint&) override { return value_; }

 private:
  bool value_;
};

/// Wraps a callable; concurrency must be declared by the caller.
class FunctionOracle final : public ReliabilityOracle {
 public:
  using Fn = std::function<bool(const StatePoint&)>;
  FunctionOracle(Fn fn, OracleConcurrency concurrency, std::string name = "function")
      : fn_(std::move(fn)), concurrency_(concurrency), name_(std::move(name)) {}
  OracleConcurrency concurrency() const override { return concurrency_; }
  std::unique_ptr<ReliabilityOracle> replicate() const override {
    return std::make_unique<FunctionOracle>(fn_, concurrency_, name_);
  }
  std::string name() const override { return name_; }

 protected:
  bool evaluate(const StatePoint& x) override { return fn_(x); }

 private:
  Fn fn_;
  OracleConcurrency concurrency_;
  std::string name_;
};

/// Failure set = union of closed balls |x_J - c| <= rho over interval
/// coordinates J. With one center this is the ball oracle.
class IslandsOracle : public ReliabilityOracle {
 public:
  /// coords empty selects every interval coordinate of actor 0. Throws
  /// ConfigError if a ball leaves the interval box or J touches a non-interval
  /// coordinate.
  IslandsOracle(const StateSpace& space, std::vector<std::vector<double>> centers, double rho,
                std::vector<std::size_t> coords = {});

  OracleConcurrency concurrency() const override { return OracleConcurrency::ConcurrentSafe; }
  std::unique_ptr<ReliabilityOracle> replicate() const override {
    return std::make_unique<IslandsOracle>(*this);
  }
  std::string name() const override { return centers_.size() == 1 ? "ball" : "islands"; }

  /// P(F = 0) under the uniform law: sum of ball volumes over box volume.
  /// Exact when the balls are pairwise disjoint (checked, else throws).
  double analytic_failure_probability() const;

  const std::vector<std::size_t>& coords() const noexcept { return coords_; }
  const std::vector<std::vector<double>>& centers() const noexcept { return centers_; }
  double radius() const noexcept { return rho_; }

  IslandsOracle(const IslandsOracle& other)
      : ReliabilityOracle(), coords_(other.coords_), centers_(other.centers_), rho_(other.rho_),
        box_volume_(other.box_volume_) {}

 protected:
  bool evaluate(const StatePoint& x) override;
  void evaluate_many(const PointBatch& batch, std::span<std::uint8_t> flags) override;

 private:
  std::vector<std::size_t> coords_;
  std::vector<std::vector<double>> centers_;
  double rho_;
  double box_volume_ = 1.0;
};

IslandsOracle ball_oracle(const StateSpace& space, std::vector<double> center, double rho,
                          std::vector<std::size_t> coords = {});

IslandsOracle islands_oracle(const StateSpace& space, std::vector<std::vector<double>> centers,
                             double rho, std::vector<std::size_t> coords = {});

/// Volume of the d-dimensional ball of radius rho.
double ball_volume(std::size_t d, double rho);

}  // namespace relsim
