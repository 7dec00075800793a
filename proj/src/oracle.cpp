#include "relsim/oracle.hpp"

#include <cmath>
#include <numbers>
#include <variant>

#include "relsim/errors.hpp"
#include "relsim/kernels.hpp"

namespace relsim {

void PointBatch::push_back(const StatePoint& x) {
  if (x.size() != dim_) throw std::invalid_argument("PointBatch: dimension mismatch");
  if (size_ == capacity_) throw std::length_error("PointBatch: full");
  for (std::size_t d = 0; d < dim_; ++d) data_[d * capacity_ + size_] = x[d];
  ++size_;
}

StatePoint PointBatch::point(std::size_t i) const {
  std::vector<double> c(dim_);
  for (std::size_t d = 0; d < dim_; ++d) c[d] = data_[d * capacity_ + i];
  return StatePoint(std::move(c));
}

bool ReliabilityOracle::operator()(const StatePoint& x) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  try {
    return evaluate(x);
  } catch (const OracleError&) {
    throw;
  } catch (const std::exception& e) {
    throw OracleError(name() + ": " + e.what());
  } catch (...) {
    throw OracleError(name() + ": unknown failure");
  }
}

bool ReliabilityOracle::pair(const StatePoint& constraint_state, const StatePoint& warm_start) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  try {
    return evaluate_pair(constraint_state, warm_start);
  } catch (const OracleError&) {
    throw;
  } catch (const std::exception& e) {
    throw OracleError(name() + ": " + e.what());
  } catch (...) {
    throw OracleError(name() + ": unknown failure");
  }
}

void ReliabilityOracle::evaluate_batch(const PointBatch& batch, std::span<std::uint8_t> flags) {
  if (flags.size() != batch.size()) throw std::invalid_argument("evaluate_batch: size mismatch");
  calls_.fetch_add(batch.size(), std::memory_order_relaxed);
  try {
    evaluate_many(batch, flags);
  } catch (const OracleError&) {
    throw;
  } catch (const std::exception& e) {
    throw OracleError(name() + ": " + e.what());
  }
}

void ReliabilityOracle::evaluate_many(const PointBatch& batch, std::span<std::uint8_t> flags) {
  for (std::size_t i = 0; i < batch.size(); ++i) flags[i] = evaluate(batch.point(i)) ? 1 : 0;
}

OraclePool::OraclePool(ReliabilityOracle& prototype, std::size_t workers)
    : prototype_(prototype), workers_(workers == 0 ? 1 : workers) {
  if (prototype_.concurrency() == OracleConcurrency::ReplicatePerWorker && workers_ > 1) {
    replicas_.reserve(workers_);
    // Worker 0 uses the prototype itself.
    replicas_.push_back(nullptr);
    for (std::size_t w = 1; w < workers_; ++w) replicas_.push_back(prototype_.replicate());
  }
}

ReliabilityOracle& OraclePool::for_worker(std::size_t worker) {
  if (replicas_.empty() || worker == 0) return prototype_;
  return *replicas_.at(worker);
}

double ball_volume(std::size_t d, double rho) {
  const double half = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0) * std::pow(rho, static_cast<double>(d));
}

IslandsOracle::IslandsOracle(const StateSpace& space, std::vector<std::vector<double>> centers,
                             double rho, std::vector<std::size_t> coords)
    : coords_(std::move(coords)), centers_(std::move(centers)), rho_(rho) {
  if (coords_.empty()) coords_ = space.interval_coords();
  if (coords_.empty()) throw ConfigError("ball oracle needs interval coordinates");
  if (centers_.empty()) throw ConfigError("ball oracle needs at least one center");
  if (!(rho_ >= 0.0) || !std::isfinite(rho_)) throw ConfigError("ball radius must be >= 0");

  // Map each selected coordinate to its interval bounds (actor 0).
  std::vector<Interval> bounds;
  for (std::size_t coord : coords_) {
    bool found = false;
    for (std::size_t c = 0; c < space.components().size() && !found; ++c) {
      const auto* b = std::get_if<IntervalBlock>(&space.components()[c].component);
      const std::size_t off = space.offset(c);
      if (b && coord >= off && coord < off + b->dims.size()) {
        bounds.push_back(b->dims[coord - off]);
        found = true;
      }
    }
    if (!found) throw ConfigError("ball oracle coordinate is not an interval coordinate");
  }
  box_volume_ = 1.0;
  for (const auto& iv : bounds) box_volume_ *= iv.hi - iv.lo;

  for (const auto& c : centers_) {
    if (c.size() != coords_.size()) throw ConfigError("ball center has wrong dimension");
    for (std::size_t d = 0; d < c.size(); ++d) {
      if (c[d] - rho_ < bounds[d].lo || c[d] + rho_ > bounds[d].hi) {
        throw ConfigError("ball is not contained in the interval box");
      }
    }
  }
}

double IslandsOracle::analytic_failure_probability() const {
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    for (std::size_t j = i + 1; j < centers_.size(); ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < coords_.size(); ++d) {
        const double diff = centers_[i][d] - centers_[j][d];
        s += diff * diff;
      }
      if (std::sqrt(s) <= 2.0 * rho_) throw ConfigError("islands overlap; no closed form");
    }
  }
  return static_cast<double>(centers_.size()) * ball_volume(coords_.size(), rho_) / box_volume_;
}

bool IslandsOracle::evaluate(const StatePoint& x) {
  const double rho2 = rho_ * rho_;
  for (const auto& c : centers_) {
    double s = 0.0;
    for (std::size_t d = 0; d < coords_.size(); ++d) {
      const double diff = x[coords_[d]] - c[d];
      s = s + diff * diff;
    }
    if (s <= rho2) return false;
  }
  return true;
}

void IslandsOracle::evaluate_many(const PointBatch& batch, std::span<std::uint8_t> flags) {
  const std::size_t n = batch.size();
  std::vector<double> columns(coords_.size() * n);
  for (std::size_t d = 0; d < coords_.size(); ++d) {
    const auto col = batch.column(coords_[d]);
    std::copy(col.begin(), col.end(), columns.begin() + static_cast<std::ptrdiff_t>(d * n));
  }
  std::vector<double> dist2(n);
  const double rho2 = rho_ * rho_;
  for (std::size_t i = 0; i < n; ++i) flags[i] = 1;
  for (const auto& c : centers_) {
    kernels::squared_distances(columns, c, dist2);
    for (std::size_t i = 0; i < n; ++i) {
      if (dist2[i] <= rho2) flags[i] = 0;
    }
  }
}

IslandsOracle ball_oracle(const StateSpace& space, std::vector<double> center, double rho,
                          std::vector<std::size_t> coords) {
  return IslandsOracle(space, {std::move(center)}, rho, std::move(coords));
}

IslandsOracle islands_oracle(const StateSpace& space, std::vector<std::vector<double>> centers,
                             double rho, std::vector<std::size_t> coords) {
  return IslandsOracle(space, std::move(centers), rho, std::move(coords));
}

}  // namespace relsim
