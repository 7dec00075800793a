#pragma once

// End-to-end subset simulation: crude Monte Carlo for level 1, seed harvesting
// and batched RWM for levels 2..N, then the product bound and its
// interpretation as a time between failures.
//
// Every random decision draws from a stream addressed by (seed, level, role,
// index), and all reductions run in index order, so the report does not
// depend on the number of workers.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relsim/chain.hpp"
#include "relsim/diagnostics.hpp"
#include "relsim/estimator.hpp"
#include "relsim/oracle.hpp"
#include "relsim/statespace.hpp"

namespace relsim {

struct DiagnosticsConfig {
  bool enabled = false;
  std::size_t pilots = 5;
  PilotBasis basis = PilotBasis::Trig;
  /// Independent honest prefixes per diagnosed level.
  std::size_t honest_samples = 200;
  /// Diagnose levels 2..max_level.
  std::size_t max_level = 2;
  double confidence = 0.99;
};

struct SubsetConfig {
  std::uint64_t seed = 1;
  double confidence = 0.99;
  /// Level 1: K samples split into `level1_chunks` independent streams.
  std::uint64_t level1_samples = 100'000;
  std::size_t level1_chunks = 16;
  IntervalMethod level1_interval = IntervalMethod::Normal;
  /// Levels >= 2: M batches of K RWM steps.
  std::size_t batches = 30;
  std::uint64_t steps = 10'000;
  PerturbationRadii rwm_radii;
  std::size_t burn_in = 0;
  SeedMode seed_mode = SeedMode::Honest;
  std::uint64_t honest_budget_per_seed = 10'000'000;
  /// 0 selects default_workers().
  std::size_t workers = 1;
  bool short_circuit = true;
  /// Stop at an unreachable level and report the levels reached instead of failing.
  bool allow_truncation = false;
  double latency_seconds = 0.01;
  std::optional<double> variance_bound_constant;
  DiagnosticsConfig diagnostics;
  SamplingOptions sampling{};
  /// Burn-in of the independence sampler for honest draws under a density.
  std::size_t density_burn_in = 100;

  /// Throws ConfigError when a field is out of range for `space` and `model`.
  void validate(const ChainModel& model, const StateSpace& space) const;
};

struct LevelDiagnostics {
  std::size_t level = 2;
  DiagnosticsResult result;
};

struct ReliabilityReport {
  ModelKind model = ModelKind::LatencyBudget;
  std::size_t chain_length = 1;
  std::string oracle_name;
  std::uint64_t seed = 0;
  double confidence = 0.0;
  std::vector<LevelEstimate> levels;
  ProductEstimate product;
  FailureInterval time_between_failures;
  double latency_seconds = 0.0;
  std::vector<LevelDiagnostics> diagnostics;
  std::optional<VarianceBoundCheck> variance_bound;
  /// Set when allow_truncation stopped the run early: the first unreachable level.
  std::optional<std::size_t> truncated_at;
  std::string truncation_reason;
  std::uint64_t total_oracle_calls = 0;

  /// All diagnosed levels passed (true when none ran).
  bool diagnostics_pass() const;
};

/// Runs the full estimator. `density` (optional) weights X_1 against the
/// uniform law.
ReliabilityReport run_subset_simulation(const ChainModel& model, const StateSpace& space,
                                        ReliabilityOracle& oracle, const SubsetConfig& config,
                                        const Density* density = nullptr);

/// Diagnostics only: honest sample vs RWM chains for levels 2..max_level.
std::vector<LevelDiagnostics> run_diagnostics(const ChainModel& model, const StateSpace& space,
                                              ReliabilityOracle& oracle, const SubsetConfig& config,
                                              const Density* density = nullptr);

}  // namespace relsim
