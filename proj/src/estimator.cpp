#include "relsim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "relsim/errors.hpp"
#include "relsim/parallel.hpp"

namespace relsim {

namespace {

// Reservoir streams hang off a fixed child id so keeping candidates never
// perturbs the main sampling stream.
constexpr std::uint64_t kReservoirStream = 0x5eed'cafe'0001ull;

double checked_density(const Density& density, const StatePoint& x) {
  const double f = density(x);
  if (!std::isfinite(f) || f < 0.0) {
    throw DensityError("density returned " + std::to_string(f) + " (must be finite and >= 0)");
  }
  return f;
}

bool level1_flag(ReliabilityOracle& oracle, const StatePoint& x, bool pair_form) {
  return pair_form ? oracle.pair(x, x) : oracle(x);
}

}  // namespace

std::string_view to_string(IntervalMethod method) noexcept {
  switch (method) {
    case IntervalMethod::Normal: return "normal";
    case IntervalMethod::ClopperPearson: return "clopper_pearson";
    case IntervalMethod::StudentT: return "student_t";
  }
  return "normal";
}

std::string_view to_string(SeedMode mode) noexcept {
  return mode == SeedMode::Honest ? "honest" : "carryover";
}

IntervalMethod parse_interval_method(std::string_view text) {
  if (text == "normal") return IntervalMethod::Normal;
  if (text == "clopper_pearson") return IntervalMethod::ClopperPearson;
  if (text == "student_t") return IntervalMethod::StudentT;
  throw ConfigError("unknown interval method '" + std::string(text) + "'");
}

SeedMode parse_seed_mode(std::string_view text) {
  if (text == "honest") return SeedMode::Honest;
  if (text == "carryover") return SeedMode::Carryover;
  throw ConfigError("unknown seed mode '" + std::string(text) + "'");
}

void CandidateReservoir::offer(const Prefix& prefix) { offer(Prefix(prefix)); }

void CandidateReservoir::offer(Prefix&& prefix) {
  ++seen_;
  if (capacity_ == 0) return;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(prefix));
    return;
  }
  const std::uint64_t j = rng_.below(seen_);
  if (j < capacity_) items_[j] = std::move(prefix);
}

// ---- X_1 under a density ---------------------------------------------------------

StatePoint independence_sampler_step(const StatePoint& y, const Density& density,
                                     const StateSpace& space, RandomStream& rng,
                                     const SamplingOptions& sampling) {
  const double fy = checked_density(density, y);
  if (!(fy > 0.0)) throw DensityError("independence sampler started where the density is 0");
  StatePoint w = sample_uniform(space, rng, sampling);
  const double fw = checked_density(density, w);
  const double u = rng.uniform01();
  return u * fy < fw ? w : y;
}

StatePoint sample_x1(const StateSpace& space, const Density* density, std::size_t burn_in,
                     RandomStream& rng, const SamplingOptions& sampling) {
  StatePoint y = sample_uniform(space, rng, sampling);
  if (density == nullptr) return y;
  std::size_t attempts = 1;
  while (!(checked_density(*density, y) > 0.0)) {
    if (attempts++ >= sampling.max_initial_attempts) {
      throw DensityError("no point with positive density found for the independence sampler");
    }
    y = sample_uniform(space, rng, sampling);
  }
  for (std::size_t i = 0; i < burn_in; ++i) y = independence_sampler_step(y, *density, space, rng, sampling);
  return y;
}

// ---- level 1 -------------------------------------------------------------------

CrudeChunk crude_mc_chunk(ReliabilityOracle& oracle, const StateSpace& space, std::uint64_t samples,
                          RandomStream& rng, const CrudeOptions& options) {
  CrudeChunk chunk;
  CandidateReservoir reservoir(options.keep_failures, rng.substream(kReservoirStream));

  auto record = [&](const StatePoint& x, bool flag) {
    chunk.moments.add(flag ? 0.0 : 1.0);
    if (!flag) {
      ++chunk.failures;
      reservoir.offer(Prefix{x});
    }
  };

  if (options.density != nullptr) {
    // One independence-sampler chain across the chunk.
    StatePoint y = sample_x1(space, options.density, 0, rng, options.sampling);
    for (std::uint64_t j = 0; j < samples; ++j) {
      y = independence_sampler_step(y, *options.density, space, rng, options.sampling);
      record(y, level1_flag(oracle, y, options.pair_form));
    }
  } else if (options.pair_form || options.batch_size <= 1) {
    for (std::uint64_t j = 0; j < samples; ++j) {
      const StatePoint x = sample_uniform(space, rng, options.sampling);
      record(x, level1_flag(oracle, x, options.pair_form));
    }
  } else {
    PointBatch batch(space.dim(), options.batch_size);
    std::vector<std::uint8_t> flags(options.batch_size);
    std::uint64_t done = 0;
    while (done < samples) {
      const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(options.batch_size, samples - done));
      batch.clear();
      for (std::size_t i = 0; i < n; ++i) batch.push_back(sample_uniform(space, rng, options.sampling));
      oracle.evaluate_batch(batch, std::span<std::uint8_t>(flags).first(n));
      for (std::size_t i = 0; i < n; ++i) {
        if (flags[i]) {
          chunk.moments.add(0.0);
        } else {
          record(batch.point(i), false);
        }
      }
      done += n;
    }
  }
  // Counted locally: a shared oracle's counter also sees other workers.
  chunk.oracle_calls = samples;
  chunk.kept = reservoir.items();
  chunk.seen = reservoir.seen();
  return chunk;
}

LevelEstimate level1_from_chunks(std::span<const CrudeChunk> chunks, double confidence,
                                 IntervalMethod method) {
  if (chunks.empty()) throw std::invalid_argument("level 1 needs at least one chunk");
  LevelEstimate est;
  est.level = 1;
  est.method = method;
  est.confidence = confidence;
  WelfordAccumulator all;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& c = chunks[i];
    all.merge(c.moments);
    est.failures += c.failures;
    est.oracle_calls += c.oracle_calls;
    est.batches.push_back({i, c.moments.count ? static_cast<double>(c.failures) / static_cast<double>(c.moments.count) : 0.0,
                           c.moments.count, c.failures});
  }
  est.total_samples = all.count;
  if (est.total_samples == 0) throw std::invalid_argument("level 1 needs K >= 1");
  est.samples_per_batch = chunks.front().moments.count;
  const double n = static_cast<double>(est.total_samples);
  est.estimate = static_cast<double>(est.failures) / n;
  est.variance = est.estimate * (1.0 - est.estimate);
  est.estimator_variance = est.variance / n;

  switch (method) {
    case IntervalMethod::Normal:
      est.interval = normal_interval(est.estimate, est.variance, est.total_samples, confidence);
      break;
    case IntervalMethod::ClopperPearson:
      est.interval = clopper_pearson_interval(est.failures, est.total_samples, confidence);
      break;
    case IntervalMethod::StudentT: {
      std::vector<double> means;
      for (const auto& b : est.batches) means.push_back(b.mean);
      est.interval = student_t_interval(means, confidence);
      break;
    }
  }
  est.below_resolution = est.failures == 0;
  est.rule_of_three = 3.0 / n;
  return est;
}

LevelEstimate crude_mc(ReliabilityOracle& oracle, const StateSpace& space, std::uint64_t samples,
                       double confidence, RandomStream& rng, const CrudeOptions& options) {
  if (samples == 0) throw std::invalid_argument("crude_mc: K must be >= 1");
  const CrudeChunk chunk = crude_mc_chunk(oracle, space, samples, rng, options);
  const IntervalMethod method =
      options.method == IntervalMethod::StudentT ? IntervalMethod::Normal : options.method;
  return level1_from_chunks(std::span<const CrudeChunk>(&chunk, 1), confidence, method);
}

// ---- seeds ------------------------------------------------------------------------

SeedPool harvest_honest(const ChainModel& model, const StateSpace& space, OraclePool& oracles,
                        std::size_t level, std::size_t count, std::uint64_t seed,
                        std::uint64_t stream_tag, std::size_t workers,
                        const HonestOptions& options) {
  if (level < 2 || level > model.length) {
    throw std::invalid_argument("harvest_honest: level must lie in [2, N]");
  }
  const std::size_t prefix_len = level - 1;
  struct Slot {
    Prefix prefix;
    std::uint64_t draws = 0;
    std::uint64_t calls = 0;
    bool found = false;
  };
  std::vector<Slot> slots(count);
  parallel_for(count, workers, [&](std::size_t i, std::size_t worker) {
    ReliabilityOracle& oracle = oracles.for_worker(worker);
    RandomStream rng = RandomStream::for_path(seed, {level, stream_tag, i});
    Slot& slot = slots[i];
    while (slot.draws < options.budget_per_seed) {
      ++slot.draws;
      Prefix prefix;
      prefix.reserve(prefix_len);
      prefix.push_back(sample_x1(space, options.density, options.density_burn_in, rng, options.sampling));
      bool all_zero = true;
      for (std::size_t j = 0; j < prefix_len; ++j) {
        if (j > 0) prefix.push_back(extend(model, space, prefix, rng, options.sampling));
        ++slot.calls;
        if (state_flag(model.kind, oracle, prefix.front(), prefix.back())) {
          all_zero = false;
          if (options.short_circuit) break;
        }
      }
      if (all_zero) {
        slot.prefix = std::move(prefix);
        slot.found = true;
        return;
      }
    }
  });

  SeedPool pool;
  pool.level = level;
  pool.provenance = SeedMode::Honest;
  for (std::size_t i = 0; i < count; ++i) {
    pool.draws += slots[i].draws;
    pool.oracle_calls += slots[i].calls;
    if (!slots[i].found) {
      throw LevelUnreachable(level, "no failure prefix within " + std::to_string(options.budget_per_seed) +
                                        " honest draws for seed " + std::to_string(i));
    }
    pool.seeds.push_back(std::move(slots[i].prefix));
  }
  pool.observed = pool.draws;
  return pool;
}

SeedPool harvest_carryover(std::size_t level, std::span<const std::vector<Prefix>> per_batch,
                           std::uint64_t observed, std::size_t count) {
  SeedPool pool;
  pool.level = level;
  pool.provenance = SeedMode::Carryover;
  pool.observed = observed;
  std::size_t available = 0;
  for (const auto& b : per_batch) available += b.size();
  if (available == 0) {
    throw LevelUnreachable(level, "level " + std::to_string(level - 1) +
                                      " produced no failure samples to carry over");
  }
  const std::size_t target = std::min(count, available);
  // Round-robin over source batches: item r of every batch before item r + 1.
  for (std::size_t r = 0; pool.seeds.size() < target; ++r) {
    for (const auto& b : per_batch) {
      if (r < b.size()) {
        pool.seeds.push_back(b[r]);
        if (pool.seeds.size() == target) break;
      }
    }
  }
  return pool;
}

// ---- levels k >= 2 -----------------------------------------------------------------

RwmBatchResult rwm_level_batch(const ChainModel& model, const StateSpace& space,
                               ReliabilityOracle& oracle, const Prefix& seed, std::uint64_t steps,
                               const PerturbationRadii& rwm_radii, RandomStream& rng,
                               const RwmOptions& options) {
  if (seed.empty()) throw std::invalid_argument("rwm_level_batch: empty seed");
  if (seed.size() >= model.length) throw std::invalid_argument("rwm_level_batch: seed longer than N - 1");
  if (steps == 0) throw std::invalid_argument("rwm_level_batch: K must be >= 1");

  const std::size_t prefix_len = seed.size();
  CandidateReservoir reservoir(options.keep_failures, rng.substream(kReservoirStream));
  RwmBatchResult out;
  auto flag = [&](const StatePoint& first, const StatePoint& state) {
    ++out.oracle_calls;
    return state_flag(model.kind, oracle, first, state);
  };

  Prefix y = seed;
  double fy = 1.0;
  if (options.density != nullptr) {
    fy = checked_density(*options.density, y.front());
    if (!(fy > 0.0)) throw DensityError("RWM seed lies where the density is 0");
  }

  auto move = [&] {
    StatePoint y1 = perturb(y.front(), rwm_radii, space, rng, options.sampling);
    double fprop = 1.0;
    if (options.density != nullptr) {
      fprop = checked_density(*options.density, y1);
      if (!(rng.uniform01() * fy < fprop)) return;
    }
    Prefix proposal;
    proposal.reserve(prefix_len);
    proposal.push_back(std::move(y1));
    bool all_zero = true;
    for (std::size_t j = 0; j < prefix_len; ++j) {
      if (j > 0) proposal.push_back(extend(model, space, proposal, rng, options.sampling));
      if (flag(proposal.front(), proposal.back())) {
        all_zero = false;
        if (options.short_circuit) break;
      }
    }
    if (all_zero) {
      y = std::move(proposal);
      fy = fprop;
      ++out.accepted;
    }
  };

  for (std::size_t b = 0; b < options.burn_in; ++b) move();
  out.accepted = 0;

  for (std::uint64_t step = 0; step < steps; ++step) {
    const StatePoint& anchor = y[anchor_index(model.kind, prefix_len)];
    StatePoint next = perturb(anchor, model.perturbation, space, rng, options.sampling);
    if (!flag(y.front(), next)) {
      ++out.failures;
      if (options.keep_failures > 0) {
        Prefix candidate = y;
        candidate.push_back(std::move(next));
        reservoir.offer(std::move(candidate));
      } else {
        reservoir.offer(Prefix{});
      }
    }
    if (options.observer) options.observer(y);
    move();
  }

  out.samples = steps;
  out.mean = static_cast<double>(out.failures) / static_cast<double>(steps);
  out.kept = reservoir.items();
  out.seen = reservoir.seen();
  return out;
}

LevelEstimate level_from_batches(std::size_t level, std::span<const RwmBatchResult> batches,
                                 double confidence) {
  if (batches.size() < 2) throw std::invalid_argument("level estimate needs M >= 2 batches");
  LevelEstimate est;
  est.level = level;
  est.method = IntervalMethod::StudentT;
  est.confidence = confidence;
  std::vector<double> means;
  means.reserve(batches.size());
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const auto& b = batches[i];
    means.push_back(b.mean);
    est.batches.push_back({i, b.mean, b.samples, b.failures});
    est.total_samples += b.samples;
    est.failures += b.failures;
    est.oracle_calls += b.oracle_calls;
    est.accepted_moves += b.accepted;
  }
  const BatchMoments m = batch_moments(means);
  est.estimate = m.mean;
  est.variance = m.variance;
  est.estimator_variance = m.variance / static_cast<double>(batches.size());
  est.interval = student_t_interval(m.mean, m.variance, batches.size(), confidence);
  est.samples_per_batch = batches.front().samples;
  est.seeds = batches.size();
  est.below_resolution = est.failures == 0;
  est.rule_of_three = 3.0 / static_cast<double>(est.total_samples);
  return est;
}

// ---- combination and interpretation --------------------------------------------

ProductEstimate combine_product(std::span<const LevelEstimate> levels, double confidence) {
  if (levels.empty()) throw std::invalid_argument("combine_product: no levels");
  ProductEstimate out{1.0, 1.0, 1.0, 0.0};
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    if (l.level != i + 1) {
      throw std::invalid_argument("combine_product: expected level " + std::to_string(i + 1) +
                                  ", got level " + std::to_string(l.level));
    }
    out.point *= l.estimate;
    out.upper_bound *= l.interval.hi;
    out.upper_bound_rule_of_three *= l.below_resolution ? std::max(l.interval.hi, l.rule_of_three)
                                                        : l.interval.hi;
  }
  out.nominal_joint_confidence =
      std::max(0.0, 1.0 - static_cast<double>(levels.size()) * (1.0 - confidence));
  return out;
}

VarianceBoundCheck variance_bound_check(std::span<const LevelMoments> levels, double constant) {
  VarianceBoundCheck out;
  out.constant = constant;
  if (levels.empty()) return out;
  const std::size_t n = levels.size();
  if (n == 1) {
    out.hypothesis_holds = true;
    out.bound = levels.front().variance;
    return out;
  }
  const double lhs_factor = std::ldexp(1.0, static_cast<int>(n)) - 2.0;
  out.hypothesis_holds = true;
  double product = 1.0;
  for (const auto& l : levels) {
    if (!(lhs_factor * l.mean * l.mean <= constant * l.variance)) out.hypothesis_holds = false;
    product *= l.variance;
  }
  out.bound = (1.0 + std::pow(constant, static_cast<double>(n - 1))) * product;
  return out;
}

std::string truncated_3sig(double value) {
  if (!std::isfinite(value) || value <= 0.0) {
    if (value == 0.0) return "0";
    throw std::invalid_argument("truncated_3sig: value must be positive and finite");
  }
  int e = static_cast<int>(std::floor(std::log10(value)));
  auto digits = static_cast<long long>(std::floor(value / std::pow(10.0, e - 2)));
  if (digits >= 1000) {
    digits /= 10;
    ++e;
  } else if (digits < 100) {
    e -= 1;
    digits = static_cast<long long>(std::floor(value / std::pow(10.0, e - 2)));
  }
  char buf[64];
  if (e >= 6) {
    std::snprintf(buf, sizeof buf, "%llde%d", digits, e - 2);
  } else if (e >= 2) {
    long long whole = digits;
    for (int i = 2; i < e; ++i) whole *= 10;
    std::snprintf(buf, sizeof buf, "%lld", whole);
  } else if (e == 1) {
    std::snprintf(buf, sizeof buf, "%lld.%lld", digits / 10, digits % 10);
  } else if (e == 0) {
    std::snprintf(buf, sizeof buf, "%lld.%02lld", digits / 100, digits % 100);
  } else {
    std::snprintf(buf, sizeof buf, "%lld.%02llde%d", digits / 100, digits % 100, e);
  }
  return buf;
}

FailureInterval time_between_failures(double p_up, double latency_seconds) {
  if (!std::isfinite(p_up) || p_up < 0.0 || p_up > 1.0) {
    throw std::invalid_argument("time_between_failures: p_up must lie in [0, 1]");
  }
  if (!std::isfinite(latency_seconds) || !(latency_seconds > 0.0)) {
    throw std::invalid_argument("time_between_failures: latency T must be > 0");
  }
  FailureInterval out;
  if (p_up == 0.0) {
    out.text = "no failure observed; bound only";
    return out;
  }
  out.finite = true;
  out.seconds = latency_seconds / p_up;
  out.years = out.seconds / kSecondsPerYear;
  out.text = "> " + truncated_3sig(out.years) + " years";
  return out;
}

}  // namespace relsim
