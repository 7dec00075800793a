#include "relsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relsim/errors.hpp"
#include "relsim/parallel.hpp"

namespace relsim {

namespace {

// Stream roles under (seed, level, role, index).
enum StreamRole : std::uint64_t {
  kCrude = 1,
  kHonestSeeds = 2,
  kRwm = 3,
  kPilots = 4,
  kDiagnosticHonest = 5,
};

struct LevelRun {
  std::vector<RwmBatchResult> batches;
  std::optional<PilotAccumulator> pilots;
};

LevelRun run_level(const ChainModel& model, const StateSpace& space, OraclePool& pool,
                   const SubsetConfig& config, const Density* density, std::size_t level,
                   const SeedPool& seeds, std::size_t keep,
                   const std::vector<PilotFunction>* pilots, std::size_t workers) {
  const std::size_t m = seeds.seeds.size();
  LevelRun run;
  run.batches.resize(m);
  std::vector<PilotAccumulator> accumulators;
  if (pilots != nullptr) accumulators.assign(m, PilotAccumulator(*pilots));

  parallel_for(m, workers, [&](std::size_t b, std::size_t worker) {
    RandomStream rng = RandomStream::for_path(config.seed, {level, kRwm, b});
    RwmOptions options;
    options.burn_in = config.burn_in;
    options.density = density;
    options.keep_failures = keep;
    options.short_circuit = config.short_circuit;
    options.sampling = config.sampling;
    if (pilots != nullptr) {
      PilotAccumulator& acc = accumulators[b];
      options.observer = [&acc](const Prefix& y) { acc.add(y.front()); };
    }
    run.batches[b] = rwm_level_batch(model, space, pool.for_worker(worker), seeds.seeds[b],
                                     config.steps, config.rwm_radii, rng, options);
  });

  if (pilots != nullptr) {
    run.pilots.emplace(*pilots);
    for (const auto& acc : accumulators) run.pilots->merge(acc);
  }
  return run;
}

HonestOptions honest_options(const SubsetConfig& config, const Density* density) {
  HonestOptions h;
  h.budget_per_seed = config.honest_budget_per_seed;
  h.density = density;
  h.density_burn_in = config.density_burn_in;
  h.short_circuit = config.short_circuit;
  h.sampling = config.sampling;
  return h;
}

std::vector<PilotFunction> level_pilots(const StateSpace& space, const SubsetConfig& config,
                                        std::size_t level) {
  RandomStream rng = RandomStream::for_path(config.seed, {level, kPilots, 0});
  return make_pilots(space, config.diagnostics.pilots, rng, config.diagnostics.basis);
}

struct DiagnosisOutcome {
  LevelDiagnostics diagnostics;
  std::uint64_t oracle_calls = 0;
};

DiagnosisOutcome diagnose_level(const ChainModel& model, const StateSpace& space, OraclePool& pool,
                                const SubsetConfig& config, const Density* density,
                                std::size_t level, const std::vector<PilotFunction>& pilots,
                                const PilotAccumulator& rwm, std::size_t workers) {
  const SeedPool honest =
      harvest_honest(model, space, pool, level, config.diagnostics.honest_samples, config.seed,
                     kDiagnosticHonest, workers, honest_options(config, density));
  PilotAccumulator reference(pilots);
  for (const auto& prefix : honest.seeds) reference.add(prefix.front());
  DiagnosisOutcome out;
  out.diagnostics.level = level;
  out.diagnostics.result =
      compare(reference.moments(), rwm.means(), rwm.count(), config.diagnostics.confidence);
  out.oracle_calls = honest.oracle_calls;
  return out;
}

std::size_t resolve_workers(const SubsetConfig& config) {
  return config.workers == 0 ? default_workers() : config.workers;
}

}  // namespace

void SubsetConfig::validate(const ChainModel& model, const StateSpace& space) const {
  model.validate(space);
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
  require(level1_samples >= 1, "level-1 sample count K must be >= 1");
  require(level1_chunks >= 1, "level-1 chunk count must be >= 1");
  require(std::isfinite(latency_seconds) && latency_seconds > 0.0, "latency must be > 0 seconds");
  if (model.length >= 2) {
    require(batches >= 2, "batch count M must be >= 2");
    require(steps >= 1, "RWM steps K must be >= 1");
    require(honest_budget_per_seed >= 1, "honest budget must be >= 1");
    space.validate(rwm_radii);
  }
  if (diagnostics.enabled) {
    require(diagnostics.pilots >= 1, "diagnostics need at least one pilot");
    require(diagnostics.honest_samples >= 30, "diagnostics need at least 30 honest samples");
    require(diagnostics.max_level >= 2, "diagnostics max_level must be >= 2");
    require(diagnostics.confidence > 0.0 && diagnostics.confidence < 1.0,
            "diagnostics confidence must lie in (0, 1)");
  }
  if (variance_bound_constant) {
    require(std::isfinite(*variance_bound_constant) && *variance_bound_constant >= 0.0,
            "variance bound constant must be finite and >= 0");
  }
}

bool ReliabilityReport::diagnostics_pass() const {
  return std::all_of(diagnostics.begin(), diagnostics.end(),
                     [](const LevelDiagnostics& d) { return d.result.pass; });
}

ReliabilityReport run_subset_simulation(const ChainModel& model, const StateSpace& space,
                                        ReliabilityOracle& oracle, const SubsetConfig& config,
                                        const Density* density) {
  config.validate(model, space);
  const std::size_t workers = resolve_workers(config);
  OraclePool pool(oracle, workers);
  const bool carryover = config.seed_mode == SeedMode::Carryover;

  ReliabilityReport report;
  report.model = model.kind;
  report.chain_length = model.length;
  report.oracle_name = oracle.name();
  report.seed = config.seed;
  report.confidence = config.confidence;
  report.latency_seconds = config.latency_seconds;

  // Level 1.
  const std::size_t chunk_count =
      static_cast<std::size_t>(std::min<std::uint64_t>(config.level1_chunks, config.level1_samples));
  std::vector<CrudeChunk> chunks(chunk_count);
  {
    CrudeOptions options;
    options.method = config.level1_interval;
    options.density = density;
    options.pair_form = model.kind == ModelKind::ConcurrentDesign;
    options.keep_failures = carryover && model.length > 1 ? config.batches : 0;
    options.sampling = config.sampling;
    const std::uint64_t base = config.level1_samples / chunk_count;
    const std::uint64_t extra = config.level1_samples % chunk_count;
    parallel_for(chunk_count, workers, [&](std::size_t c, std::size_t worker) {
      RandomStream rng = RandomStream::for_path(config.seed, {1, kCrude, c});
      const std::uint64_t n = base + (c < extra ? 1 : 0);
      chunks[c] = crude_mc_chunk(pool.for_worker(worker), space, n, rng, options);
    });
  }
  report.levels.push_back(level1_from_chunks(chunks, config.confidence, config.level1_interval));

  std::vector<std::vector<Prefix>> carried;
  std::uint64_t observed = 0;
  for (auto& c : chunks) {
    carried.push_back(std::move(c.kept));
    observed += c.seen;
  }
  chunks.clear();

  std::uint64_t extra_calls = 0;
  for (std::size_t k = 2; k <= model.length; ++k) {
    SeedPool seeds;
    try {
      if (carryover) {
        seeds = harvest_carryover(k, carried, observed, config.batches);
      } else {
        seeds = harvest_honest(model, space, pool, k, config.batches, config.seed, kHonestSeeds,
                               workers, honest_options(config, density));
      }
      if (seeds.seeds.size() < 2) {
        throw LevelUnreachable(k, "only " + std::to_string(seeds.seeds.size()) +
                                      " seed available, need at least 2 batches");
      }
    } catch (const LevelUnreachable& e) {
      if (!config.allow_truncation) throw;
      report.truncated_at = k;
      report.truncation_reason = e.what();
      break;
    }

    const bool diagnose = config.diagnostics.enabled && k <= config.diagnostics.max_level;
    std::vector<PilotFunction> pilots;
    if (diagnose) pilots = level_pilots(space, config, k);
    const std::size_t keep = carryover && k < model.length ? config.batches : 0;
    LevelRun run = run_level(model, space, pool, config, density, k, seeds, keep,
                             diagnose ? &pilots : nullptr, workers);

    LevelEstimate est = level_from_batches(k, run.batches, config.confidence);
    est.seeds = seeds.seeds.size();
    est.seed_provenance = seeds.provenance;
    est.oracle_calls += seeds.oracle_calls;
    report.levels.push_back(std::move(est));

    if (diagnose) {
      auto outcome = diagnose_level(model, space, pool, config, density, k, pilots, *run.pilots, workers);
      extra_calls += outcome.oracle_calls;
      report.diagnostics.push_back(std::move(outcome.diagnostics));
    }

    carried.clear();
    observed = 0;
    for (auto& b : run.batches) {
      carried.push_back(std::move(b.kept));
      observed += b.seen;
    }
  }

  report.product = combine_product(report.levels, config.confidence);
  report.time_between_failures = time_between_failures(report.product.upper_bound, config.latency_seconds);
  if (config.variance_bound_constant) {
    std::vector<LevelMoments> moments;
    for (const auto& l : report.levels) moments.push_back({l.estimate, l.estimator_variance});
    report.variance_bound = variance_bound_check(moments, *config.variance_bound_constant);
  }
  report.total_oracle_calls = extra_calls;
  for (const auto& l : report.levels) report.total_oracle_calls += l.oracle_calls;
  return report;
}

std::vector<LevelDiagnostics> run_diagnostics(const ChainModel& model, const StateSpace& space,
                                              ReliabilityOracle& oracle, const SubsetConfig& config,
                                              const Density* density) {
  model.validate(space);
  space.validate(config.rwm_radii);
  if (model.length < 2) throw ConfigError("diagnostics need a chain with N >= 2");
  if (config.batches < 1) throw ConfigError("diagnostics need at least one chain");
  if (config.diagnostics.honest_samples < 30) {
    throw ConfigError("diagnostics need at least 30 honest samples");
  }
  const std::size_t workers = resolve_workers(config);
  OraclePool pool(oracle, workers);
  const std::size_t top = std::min(model.length, std::max<std::size_t>(config.diagnostics.max_level, 2));
  std::vector<LevelDiagnostics> out;
  for (std::size_t k = 2; k <= top; ++k) {
    const SeedPool seeds = harvest_honest(model, space, pool, k, config.batches, config.seed,
                                          kHonestSeeds, workers, honest_options(config, density));
    const std::vector<PilotFunction> pilots = level_pilots(space, config, k);
    LevelRun run = run_level(model, space, pool, config, density, k, seeds, 0, &pilots, workers);
    out.push_back(
        diagnose_level(model, space, pool, config, density, k, pilots, *run.pilots, workers).diagnostics);
  }
  return out;
}

}  // namespace relsim
