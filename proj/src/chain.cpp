#include "relsim/chain.hpp"

#include <string>

#include "relsim/errors.hpp"

namespace relsim {

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::LatencyBudget ? "latency_budget" : "concurrent_design";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "latency_budget") return ModelKind::LatencyBudget;
  if (text == "concurrent_design") return ModelKind::ConcurrentDesign;
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

void ChainModel::validate(const StateSpace& space) const {
  if (length == 0) throw ConfigError("chain length N must be >= 1");
  space.validate(perturbation);
}

StatePoint extend(const ChainModel& model, const StateSpace& space, std::span<const StatePoint> prefix,
                  RandomStream& rng, const SamplingOptions& options) {
  if (prefix.empty()) throw std::invalid_argument("extend: empty prefix");
  if (prefix.size() >= model.length) throw std::invalid_argument("extend: chain already complete");
  const StatePoint& anchor = prefix[anchor_index(model.kind, prefix.size())];
  return perturb(anchor, model.perturbation, space, rng, options);
}

bool state_flag(ModelKind kind, ReliabilityOracle& oracle, const StatePoint& first,
                const StatePoint& state) {
  if (kind == ModelKind::ConcurrentDesign) return oracle.pair(first, state);
  return oracle(state);
}

IndicatorResult simulate_failure_indicator(const ChainModel& model, const StateSpace& space,
                                           ReliabilityOracle& oracle, const StatePoint& x1,
                                           RandomStream& rng, const IndicatorOptions& options) {
  IndicatorResult result;
  Prefix prefix{x1};
  prefix.reserve(model.length);
  bool all_zero = true;
  for (std::size_t k = 0; k < model.length; ++k) {
    if (k > 0) prefix.push_back(extend(model, space, prefix, rng, options.sampling));
    const bool flag = state_flag(model.kind, oracle, prefix.front(), prefix.back());
    ++result.oracle_calls;
    if (flag) {
      all_zero = false;
      if (options.short_circuit) break;
    }
  }
  result.failed = all_zero;
  return result;
}

Trajectory simulate_trajectory(const ChainModel& model, const StateSpace& space,
                               ReliabilityOracle& oracle, const StatePoint& x1, RandomStream& rng,
                               const SamplingOptions& sampling) {
  Trajectory t;
  t.states.reserve(model.length);
  t.states.push_back(x1);
  for (std::size_t k = 1; k < model.length; ++k) {
    t.states.push_back(extend(model, space, t.states, rng, sampling));
  }
  for (const auto& x : t.states) {
    t.flags.push_back(state_flag(model.kind, oracle, t.states.front(), x) ? 1 : 0);
  }
  return t;
}

}  // namespace relsim
