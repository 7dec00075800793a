#include "relsim/app/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#ifndef RELSIM_BUILD_ID
#define RELSIM_BUILD_ID "unknown"
#endif

namespace relsim::app {

using nlohmann::json;

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

json interval_json(const ConfidenceInterval& ci) { return {{"lo", ci.lo}, {"hi", ci.hi}}; }

json level_json(const LevelEstimate& l) {
  json out{{"level", l.level},
           {"method", std::string(to_string(l.method))},
           {"estimate", l.estimate},
           {"variance", l.variance},
           {"estimator_variance", l.estimator_variance},
           {"confidence", l.confidence},
           {"interval", interval_json(l.interval)},
           {"batch_count", l.batches.size()},
           {"samples_per_batch", l.samples_per_batch},
           {"total_samples", l.total_samples},
           {"failures", l.failures},
           {"oracle_calls", l.oracle_calls},
           {"accepted_moves", l.accepted_moves},
           {"seeds", l.seeds},
           {"below_resolution", l.below_resolution},
           {"rule_of_three", l.rule_of_three}};
  out["seed_provenance"] = l.seed_provenance ? json(std::string(to_string(*l.seed_provenance))) : json(nullptr);
  return out;
}

json diagnostics_levels_json(const std::vector<LevelDiagnostics>& levels) {
  json out = json::array();
  for (const auto& d : levels) {
    json pilots = json::array();
    for (const auto& p : d.result.pilots) {
      pilots.push_back({{"honest_mean", p.honest_mean},
                        {"honest_interval", interval_json(p.honest_interval)},
                        {"rwm_mean", p.rwm_mean},
                        {"verdict", p.pass ? "pass" : "fail"}});
    }
    out.push_back({{"level", d.level},
                   {"verdict", d.result.pass ? "pass" : "fail"},
                   {"honest_count", d.result.honest_count},
                   {"rwm_count", d.result.rwm_count},
                   {"confidence", d.result.confidence},
                   {"pilots", pilots}});
  }
  return out;
}

bool all_pass(const std::vector<LevelDiagnostics>& levels) {
  for (const auto& d : levels) {
    if (!d.result.pass) return false;
  }
  return true;
}

json diagnostics_section(const std::vector<LevelDiagnostics>& levels) {
  return {{"label", std::string(DiagnosticsResult::kLabel)},
          {"verdict", levels.empty() ? "not run" : (all_pass(levels) ? "pass" : "fail")},
          {"levels", diagnostics_levels_json(levels)}};
}

bool uses_vdp_solver(const OracleConfig& o) { return o.type == "vdp" || o.type == "composite"; }

}  // namespace

std::string build_id() { return RELSIM_BUILD_ID; }

std::vector<std::string> report_notes(const ExperimentConfig& config) {
  std::vector<std::string> notes;
  const double n = static_cast<double>(config.model.length);
  const double joint = std::max(0.0, 1.0 - n * (1.0 - config.estimator.confidence));
  notes.push_back("The failure-probability bound is the product of the per-level upper confidence limits. "
                  "By the union bound its joint confidence is at least 1 - N(1 - alpha) = " +
                  fmt("%.10g", joint) + ".");
  if (uses_vdp_solver(config.oracle)) {
    notes.push_back("The failure set is defined by the exit status of the in-repo SQP solver. Its geometry, and "
                    "with it every absolute probability in this report, is specific to that solver; results "
                    "obtained with a different NLP solver are not comparable.");
  }
  if (config.oracle.type == "external") {
    notes.push_back("The failure set is defined by an external program; its determinism is not verified here.");
  }
  return notes;
}

json report_to_json(const ReliabilityReport& r, const ExperimentConfig& config) {
  json levels = json::array();
  for (const auto& l : r.levels) levels.push_back(level_json(l));

  json out{{"schema_version", kReportSchemaVersion},
           {"kind", "reliability_report"},
           {"build_id", build_id()},
           {"config", to_json(config, false)},
           {"model", {{"kind", std::string(to_string(r.model))}, {"length", r.chain_length}}},
           {"oracle", r.oracle_name},
           {"seed", r.seed},
           {"confidence", r.confidence},
           {"levels", levels},
           {"product",
            {{"point", r.product.point},
             {"upper_bound", r.product.upper_bound},
             {"upper_bound_rule_of_three", r.product.upper_bound_rule_of_three},
             {"nominal_joint_confidence", r.product.nominal_joint_confidence}}},
           {"time_between_failures",
            {{"latency_seconds", r.latency_seconds},
             {"finite", r.time_between_failures.finite},
             {"seconds", r.time_between_failures.seconds},
             {"years", r.time_between_failures.years},
             {"text", r.time_between_failures.text}}},
           {"diagnostics", diagnostics_section(r.diagnostics)},
           {"oracle_calls", r.total_oracle_calls},
           {"notes", report_notes(config)}};
  if (r.variance_bound) {
    out["variance_bound"] = {{"hypothesis_holds", r.variance_bound->hypothesis_holds},
                             {"bound", r.variance_bound->bound},
                             {"constant", r.variance_bound->constant}};
  } else {
    out["variance_bound"] = nullptr;
  }
  if (r.truncated_at) {
    out["truncation"] = {{"level", *r.truncated_at}, {"reason", r.truncation_reason}};
  } else {
    out["truncation"] = nullptr;
  }
  return out;
}

json diagnostics_report_to_json(const std::vector<LevelDiagnostics>& levels, const ExperimentConfig& config) {
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "diagnostics_report"},
          {"build_id", build_id()},
          {"config", to_json(config, false)},
          {"seed", config.estimator.seed},
          {"diagnostics", diagnostics_section(levels)}};
}

std::string batches_csv(const ReliabilityReport& r) {
  std::ostringstream out;
  out << "level,batch,mean,samples,failures\n";
  char mean[40];
  for (const auto& l : r.levels) {
    for (const auto& b : l.batches) {
      std::snprintf(mean, sizeof mean, "%.17g", b.mean);
      out << l.level << ',' << b.batch << ',' << mean << ',' << b.samples << ',' << b.failures << '\n';
    }
  }
  return out.str();
}

std::string diagnostics_summary_text(const std::vector<LevelDiagnostics>& levels) {
  std::ostringstream out;
  if (levels.empty()) {
    out << "diagnostics: not run\n";
    return out.str();
  }
  for (const auto& d : levels) {
    std::size_t passed = 0;
    for (const auto& p : d.result.pilots) passed += p.pass ? 1 : 0;
    out << "diagnostics level " << d.level << ": " << (d.result.pass ? "pass" : "FAIL") << " (" << passed << "/"
        << d.result.pilots.size() << " pilots inside the honest interval, " << d.result.honest_count
        << " honest samples)\n";
  }
  out << "  " << DiagnosticsResult::kLabel << "\n";
  return out.str();
}

std::string summary_text(const ReliabilityReport& r, const ExperimentConfig& config) {
  std::ostringstream out;
  out << (config.name.empty() ? "experiment" : config.name) << ": " << to_string(r.model) << ", N = " << r.chain_length
      << ", oracle " << r.oracle_name << ", seed " << r.seed << ", alpha = " << fmt("%.10g", r.confidence) << "\n";
  for (const auto& l : r.levels) {
    out << "  level " << l.level << ": z = " << fmt("%.4g", l.estimate) << "  interval [" << fmt("%.4g", l.interval.lo)
        << ", " << fmt("%.4g", l.interval.hi) << "]  (" << l.batches.size() << " x " << l.samples_per_batch
        << " samples, " << l.failures << " failures)";
    if (l.below_resolution) out << "  below resolution, rule of three " << fmt("%.3g", l.rule_of_three);
    out << "\n";
  }
  if (r.truncated_at) out << "  truncated at level " << *r.truncated_at << ": " << r.truncation_reason << "\n";
  out << "  P(failure) <= " << fmt("%.3g", r.product.upper_bound) << " (point estimate " << fmt("%.3g", r.product.point)
      << ", nominal joint confidence >= " << fmt("%.10g", r.product.nominal_joint_confidence) << ")\n";
  out << "  time between failures: " << r.time_between_failures.text << " at T = " << fmt("%g", r.latency_seconds)
      << " s\n";
  out << "  oracle calls: " << r.total_oracle_calls << "\n";
  if (!r.diagnostics.empty()) {
    std::istringstream diag(diagnostics_summary_text(r.diagnostics));
    for (std::string line; std::getline(diag, line);) out << "  " << line << "\n";
  }
  return out.str();
}

std::string dump_document(const json& document) { return document.dump(2) + "\n"; }

void write_files_atomically(const std::filesystem::path& dir,
                            const std::vector<std::pair<std::string, std::string>>& files) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<fs::path> temps;
  auto cleanup = [&temps] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  try {
    for (const auto& [name, content] : files) {
      const fs::path tmp = dir / ("." + name + ".tmp");
      temps.push_back(tmp);
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      f << content;
      f.close();
      if (!f) throw std::runtime_error("cannot write " + tmp.string());
    }
    for (std::size_t i = 0; i < files.size(); ++i) fs::rename(temps[i], dir / files[i].first);
  } catch (...) {
    cleanup();
    throw;
  }
}

}  // namespace relsim::app
