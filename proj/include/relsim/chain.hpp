#pragma once

// Within-latency-interval state sequences.
//
//   LatencyBudget:    X_k = X_{k-1} + delta_k,  delta_k ~ D(X_{k-1}, r_p)
//   ConcurrentDesign: X_k = X_1 + delta_k,      delta_k ~ D(X_1, r_p), pairwise independent
//
// The failure event is F(x_1) = ... = F(x_N) = 0.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "relsim/oracle.hpp"
#include "relsim/rng.hpp"
#include "relsim/statespace.hpp"

namespace relsim {

enum class ModelKind { LatencyBudget, ConcurrentDesign };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);

struct ChainModel {
  ModelKind kind = ModelKind::LatencyBudget;
  std::size_t length = 1;
  PerturbationRadii perturbation;

  /// Throws ConfigError on N == 0 or radii not matching `space`.
  void validate(const StateSpace& space) const;
};

using Prefix = std::vector<StatePoint>;

struct Trajectory {
  std::vector<StatePoint> states;
  std::vector<std::uint8_t> flags;
};

/// Index of the state that X_{k} is perturbed from, given a prefix of length k-1.
inline std::size_t anchor_index(ModelKind kind, std::size_t prefix_length) {
  return kind == ModelKind::LatencyBudget ? prefix_length - 1 : 0;
}

/// Next state after `prefix` (nonempty, shorter than the chain).
StatePoint extend(const ChainModel& model, const StateSpace& space, std::span<const StatePoint> prefix,
                  RandomStream& rng, const SamplingOptions& options = {});

/// Flag of state k (0-based) given x_1: F(x_k) in the latency budget model,
/// F(x_1, x_k) (constraint state x_1, warm start x_k) in the concurrent model.
bool state_flag(ModelKind kind, ReliabilityOracle& oracle, const StatePoint& first,
                const StatePoint& state);

struct IndicatorOptions {
  /// Stop growing the chain at the first F = 1. Never changes the indicator.
  bool short_circuit = true;
  SamplingOptions sampling{};
};

struct IndicatorResult {
  bool failed = false;
  std::uint64_t oracle_calls = 0;
};

/// 1 iff every state x_1..x_N of a chain grown from x1 has F = 0.
IndicatorResult simulate_failure_indicator(const ChainModel& model, const StateSpace& space,
                                           ReliabilityOracle& oracle, const StatePoint& x1,
                                           RandomStream& rng, const IndicatorOptions& options = {});

/// Full chain with every flag evaluated.
Trajectory simulate_trajectory(const ChainModel& model, const StateSpace& space,
                               ReliabilityOracle& oracle, const StatePoint& x1, RandomStream& rng,
                               const SamplingOptions& sampling = {});

}  // namespace relsim
