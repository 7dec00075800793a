#pragma once

// Level estimators for the decomposition
//
//   P(A_1 ∩ ... ∩ A_N) = P(A_1) * prod_{k>=2} P(A_k | A_1 ∩ ... ∩ A_{k-1}).
//
// Level 1 is crude Monte Carlo. Levels k >= 2 run M random-walk Metropolis
// chains on prefixes (y_1..y_{k-1}) conditioned on all-zero flags, one chain
// per conditioning seed, and treat the M chain averages as batch means.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relsim/chain.hpp"
#include "relsim/oracle.hpp"
#include "relsim/rng.hpp"
#include "relsim/statespace.hpp"
#include "relsim/stats.hpp"

namespace relsim {

enum class IntervalMethod { Normal, ClopperPearson, StudentT };
enum class SeedMode { Honest, Carryover };

std::string_view to_string(IntervalMethod method) noexcept;
std::string_view to_string(SeedMode mode) noexcept;
IntervalMethod parse_interval_method(std::string_view text);
SeedMode parse_seed_mode(std::string_view text);

/// Density of X_1 with respect to the uniform law (need not be normalized).
using Density = std::function<double(const StatePoint&)>;

struct BatchRecord {
  std::size_t batch = 0;
  double mean = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t failures = 0;
};

struct LevelEstimate {
  std::size_t level = 1;
  IntervalMethod method = IntervalMethod::Normal;
  /// Level 1: one record per chunk. Levels >= 2: one record per RWM chain.
  std::vector<BatchRecord> batches;
  /// z_k.
  double estimate = 0.0;
  /// Level 1: maximum-likelihood p(1-p). Levels >= 2: batch variance v_k.
  double variance = 0.0;
  /// Variance of the estimate itself: variance / K (level 1) or v_k / M.
  double estimator_variance = 0.0;
  double confidence = 0.0;
  ConfidenceInterval interval;
  std::uint64_t samples_per_batch = 0;
  std::uint64_t total_samples = 0;
  std::uint64_t failures = 0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t accepted_moves = 0;
  std::size_t seeds = 0;
  std::optional<SeedMode> seed_provenance;
  /// No failure observed at this level; rule_of_three = 3 / (samples).
  bool below_resolution = false;
  double rule_of_three = 0.0;
};

/// Conditioning seeds for level k: prefixes (x_1..x_{k-1}) with all flags 0.
struct SeedPool {
  std::size_t level = 2;
  SeedMode provenance = SeedMode::Honest;
  std::vector<Prefix> seeds;
  /// Candidates seen (carryover) or draws made (honest).
  std::uint64_t observed = 0;
  std::uint64_t draws = 0;
  std::uint64_t oracle_calls = 0;
};

/// Bounded uniform subsample of failure prefixes from one source batch
/// (reservoir sampling on a dedicated stream).
class CandidateReservoir {
 public:
  CandidateReservoir(std::size_t capacity, RandomStream rng) : capacity_(capacity), rng_(rng) {}
  void offer(const Prefix& prefix);
  void offer(Prefix&& prefix);
  const std::vector<Prefix>& items() const noexcept { return items_; }
  std::uint64_t seen() const noexcept { return seen_; }

 private:
  std::size_t capacity_;
  RandomStream rng_;
  std::vector<Prefix> items_;
  std::uint64_t seen_ = 0;
};

// ---- level 1 -----------------------------------------------------------------

struct CrudeOptions {
  IntervalMethod method = IntervalMethod::Normal;
  /// Non-uniform X_1: Y_j comes from an independence sampler chain.
  const Density* density = nullptr;
  /// Evaluate F(x, x) instead of F(x) (two-argument oracles).
  bool pair_form = false;
  /// Keep up to this many failure samples (seeds for level 2).
  std::size_t keep_failures = 0;
  std::size_t batch_size = 256;
  SamplingOptions sampling{};
};

struct CrudeChunk {
  WelfordAccumulator moments;
  std::uint64_t failures = 0;
  std::uint64_t oracle_calls = 0;
  std::vector<Prefix> kept;
  std::uint64_t seen = 0;
};

/// K draws of 1{F(Y_j) = 0} from one stream.
CrudeChunk crude_mc_chunk(ReliabilityOracle& oracle, const StateSpace& space, std::uint64_t samples,
                          RandomStream& rng, const CrudeOptions& options = {});

/// Level-1 estimate from chunks reduced in order.
LevelEstimate level1_from_chunks(std::span<const CrudeChunk> chunks, double confidence,
                                 IntervalMethod method);

/// Crude Monte Carlo estimate of P(A_1) from a single stream.
LevelEstimate crude_mc(ReliabilityOracle& oracle, const StateSpace& space, std::uint64_t samples,
                       double confidence, RandomStream& rng, const CrudeOptions& options = {});

// ---- X_1 sampling under a density -------------------------------------------

/// One independence-sampler transition: propose W ~ U, accept with
/// min(1, f(W) / f(y)). Throws DensityError on negative or non-finite values.
StatePoint independence_sampler_step(const StatePoint& y, const Density& density,
                                     const StateSpace& space, RandomStream& rng,
                                     const SamplingOptions& sampling = {});

/// Draw X_1: uniform, or `burn_in` independence-sampler steps from a uniform start.
StatePoint sample_x1(const StateSpace& space, const Density* density, std::size_t burn_in,
                     RandomStream& rng, const SamplingOptions& sampling = {});

// ---- seeds ---------------------------------------------------------------------

struct HonestOptions {
  /// Prefix draws allowed per seed before the level is declared unreachable.
  std::uint64_t budget_per_seed = 10'000'000;
  const Density* density = nullptr;
  std::size_t density_burn_in = 100;
  bool short_circuit = true;
  SamplingOptions sampling{};
};

/// Independent prefixes (x_1..x_{k-1}) drawn until all flags are 0. Seed i uses
/// the stream for_path(seed, {level, stream_tag, i}).
SeedPool harvest_honest(const ChainModel& model, const StateSpace& space, OraclePool& oracles,
                        std::size_t level, std::size_t count, std::uint64_t seed,
                        std::uint64_t stream_tag, std::size_t workers,
                        const HonestOptions& options = {});

/// Seeds chosen from failure prefixes collected by level k-1, stratified
/// round-robin over source batches. Throws LevelUnreachable when none exist.
SeedPool harvest_carryover(std::size_t level, std::span<const std::vector<Prefix>> per_batch,
                           std::uint64_t observed, std::size_t count);

// ---- levels k >= 2 -----------------------------------------------------------------

struct RwmOptions {
  std::size_t burn_in = 0;
  const Density* density = nullptr;
  /// Failure prefixes to keep for the next level's carryover pool.
  std::size_t keep_failures = 0;
  bool short_circuit = true;
  /// Called with the chain state at every measured step.
  std::function<void(const Prefix&)> observer;
  SamplingOptions sampling{};
};

struct RwmBatchResult {
  double mean = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t failures = 0;
  std::uint64_t accepted = 0;
  std::uint64_t oracle_calls = 0;
  std::vector<Prefix> kept;
  std::uint64_t seen = 0;
};

/// One batch of the conditional sampler. Per step: draw ΔY ~ D(anchor, r_p)
/// and record 1{F(anchor + ΔY) = 0}; then propose y_1' ~ D(y_1, r_RWM),
/// regrow y_2'..y_{k-1}' through the model, and accept with probability
/// 1{all flags 0} f(y_1') / f(y_1).
RwmBatchResult rwm_level_batch(const ChainModel& model, const StateSpace& space,
                               ReliabilityOracle& oracle, const Prefix& seed, std::uint64_t steps,
                               const PerturbationRadii& rwm_radii, RandomStream& rng,
                               const RwmOptions& options = {});

/// Level estimate from batch results (batch means, t-interval).
LevelEstimate level_from_batches(std::size_t level, std::span<const RwmBatchResult> batches,
                                 double confidence);

// ---- combination and interpretation --------------------------------------------

struct ProductEstimate {
  double point = 0.0;
  /// Product of per-level upper interval endpoints.
  double upper_bound = 0.0;
  /// Same, with below-resolution levels replaced by their rule-of-three bound.
  double upper_bound_rule_of_three = 0.0;
  /// Union bound: 1 - N (1 - confidence), floored at 0.
  double nominal_joint_confidence = 0.0;
};

/// Throws std::invalid_argument when levels are missing or out of order.
ProductEstimate combine_product(std::span<const LevelEstimate> levels, double confidence);

struct LevelMoments {
  double mean = 0.0;
  /// Variance of the level estimator.
  double variance = 0.0;
};

struct VarianceBoundCheck {
  bool hypothesis_holds = false;
  double bound = 0.0;
  double constant = 0.0;
};

/// Checks (2^N - 2) E(Z_k)^2 <= K V(Z_k) at plug-in values and reports
/// (1 + K^{N-1}) V(Z_1)...V(Z_N), or V(Z_1) when N = 1.
VarianceBoundCheck variance_bound_check(std::span<const LevelMoments> levels, double constant);

struct FailureInterval {
  /// False when p_up == 0: no failure observed, only the bound is meaningful.
  bool finite = false;
  double seconds = 0.0;
  double years = 0.0;
  std::string text;
};

/// 365-day years.
inline constexpr double kSecondsPerYear = 365.0 * 86400.0;

/// T / p_up. Throws std::invalid_argument on p_up outside [0, 1] or T <= 0.
FailureInterval time_between_failures(double p_up, double latency_seconds);

/// Lower bound of `value` truncated to three significant digits, e.g. 792.74 -> "792",
/// 3.17098e8 -> "317e6".
std::string truncated_3sig(double value);

}  // namespace relsim
