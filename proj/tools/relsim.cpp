// relsim: config-driven runner for subset-simulation reliability experiments.
//
// Exit status: 0 success, 1 pipeline or oracle error, 2 invalid config or
// command line. A failed run leaves no output files behind.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "relsim/app/config.hpp"
#include "relsim/app/report.hpp"
#include "relsim/parallel.hpp"

using namespace relsim;
using namespace relsim::app;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App& cmd, CommonOptions& o, bool outputs) {
  cmd.add_option("--config", o.config_path, "Experiment config (JSON)")->required();
  cmd.add_option("--seed", o.seed, "Override the master seed");
  if (outputs) {
    cmd.add_option("--workers", o.workers, "Worker threads (0 = available parallelism)");
    cmd.add_option("--out-dir", o.out_dir, "Output directory");
  }
}

ExperimentConfig load_with_overrides(const CommonOptions& o) {
  ExperimentConfig c = load_config(o.config_path);
  if (o.seed) c.estimator.seed = *o.seed;
  if (o.workers) c.estimator.workers = *o.workers;
  if (o.out_dir) c.out_dir = *o.out_dir;
  return c;
}

void check_document(const JsonSchema& schema, const nlohmann::json& document, const char* what) {
  auto violations = schema.validate(document);
  if (violations.empty() && document.contains("config")) violations = config_schema().validate(document["config"]);
  if (!violations.empty()) {
    throw std::logic_error(std::string(what) + " does not match its schema:\n" + describe(violations));
  }
}

std::string run_info(const ExperimentConfig& c, const std::string& config_path, double seconds) {
  const std::size_t workers = c.estimator.workers == 0 ? default_workers() : c.estimator.workers;
  const nlohmann::json info{{"build_id", build_id()},
                            {"config_path", config_path},
                            {"seed", c.estimator.seed},
                            {"workers", workers},
                            {"wall_seconds", seconds}};
  return dump_document(info);
}

int cmd_run(const CommonOptions& o) {
  const ExperimentConfig c = load_with_overrides(o);
  const StateSpace space = build_space(c.space);
  auto oracle = build_oracle(c.oracle, space, c.space);

  const auto t0 = std::chrono::steady_clock::now();
  const ReliabilityReport report = run_subset_simulation(c.model, space, *oracle, c.estimator);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto document = report_to_json(report, c);
  check_document(report_schema(), document, "report");
  write_files_atomically(c.out_dir, {{"report.json", dump_document(document)},
                                     {"batches.csv", batches_csv(report)},
                                     {"run_info.json", run_info(c, o.config_path, seconds)}});

  std::cout << summary_text(report, c);
  std::printf("  wall time: %.3f s\n  wrote %s/{report.json,batches.csv,run_info.json}\n", seconds, c.out_dir.c_str());
  return kExitOk;
}

int cmd_diagnose(const CommonOptions& o) {
  ExperimentConfig c = load_with_overrides(o);
  c.estimator.diagnostics.enabled = true;
  if (c.model.length < 2) throw ConfigError("diagnostics need a chain of length N >= 2");
  const StateSpace space = build_space(c.space);
  auto oracle = build_oracle(c.oracle, space, c.space);

  const auto t0 = std::chrono::steady_clock::now();
  const auto levels = run_diagnostics(c.model, space, *oracle, c.estimator);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto document = diagnostics_report_to_json(levels, c);
  check_document(diagnostics_schema(), document, "diagnostics report");
  write_files_atomically(c.out_dir, {{"diagnostics.json", dump_document(document)},
                                     {"run_info.json", run_info(c, o.config_path, seconds)}});
  std::cout << diagnostics_summary_text(levels);
  std::printf("wall time: %.3f s\nwrote %s/{diagnostics.json,run_info.json}\n", seconds, c.out_dir.c_str());
  return kExitOk;
}

int cmd_serve(const CommonOptions& o) {
  const ExperimentConfig c = load_with_overrides(o);
  const StateSpace space = build_space(c.space);
  auto oracle = build_oracle(c.oracle, space, c.space);
  std::ios::sync_with_stdio(false);
  serve_oracle(*oracle, space.dim(), std::cin, std::cout);
  return kExitOk;
}

int cmd_probe(const CommonOptions& o, std::uint64_t count, const std::vector<std::string>& command, bool print) {
  const ExperimentConfig c = load_with_overrides(o);
  if (command.empty()) throw ConfigError("oracle-probe needs the oracle command after '--'");
  const StateSpace space = build_space(c.space);
  std::unique_ptr<ReliabilityOracle> reference;
  if (c.oracle.type != "external") reference = build_oracle(c.oracle, space, c.space);
  ExternalProcessOracle remote(command);

  std::uint64_t zeros = 0;
  std::uint64_t mismatches = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    RandomStream rng = RandomStream::for_path(c.estimator.seed, {0x70726f6265ull, i});
    const StatePoint x = sample_uniform(space, rng, c.estimator.sampling);
    const bool flag = remote(x);
    zeros += flag ? 0 : 1;
    if (reference && (*reference)(x) != flag) ++mismatches;
    if (print) std::cout << format_request(x) << " -> " << (flag ? 1 : 0) << "\n";
  }
  std::cout << "probed " << count << " states: " << zeros << " with F = 0";
  if (reference) std::cout << ", " << mismatches << " disagreeing with the in-process " << reference->name() << " oracle";
  std::cout << "\n";
  return mismatches == 0 ? kExitOk : kExitPipeline;
}

int cmd_validate(const std::string& kind, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read '" + path + "'");
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("not valid JSON: ") + e.what());
  }
  if (kind == "config") {
    parse_config(document);
  } else {
    const JsonSchema& schema = kind == "report" ? report_schema() : diagnostics_schema();
    auto violations = schema.validate(document);
    if (violations.empty() && document.contains("config")) violations = config_schema().validate(document["config"]);
    if (!violations.empty()) throw SchemaError(describe(violations), violations);
  }
  std::cout << path << ": valid " << kind << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subset-simulation reliability estimation for controllers"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Run the estimator and write the report");
  add_common(*run, run_opts, true);

  CommonOptions diag_opts;
  auto* diagnose = app.add_subcommand("diagnose", "Compare honest and RWM samples with pilot functions");
  add_common(*diagnose, diag_opts, true);

  CommonOptions serve_opts;
  auto* serve = app.add_subcommand("oracle-serve", "Answer line-protocol requests on stdin with the configured oracle");
  add_common(*serve, serve_opts, false);

  CommonOptions probe_opts;
  std::uint64_t probe_count = 1000;
  std::vector<std::string> probe_command;
  bool probe_print = false;
  auto* probe = app.add_subcommand("oracle-probe",
                                   "Send uniform states to an external oracle and compare with the configured one");
  add_common(*probe, probe_opts, false);
  probe->add_option("--count", probe_count, "Number of states");
  probe->add_flag("--print", probe_print, "Print every state and its flag");
  probe->add_option("command", probe_command, "Oracle command, after '--'")->expected(-1);

  std::string validate_kind = "report";
  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config, report or diagnostics document against its schema");
  validate->add_option("--kind", validate_kind, "config | report | diagnostics")
      ->check(CLI::IsMember({"config", "report", "diagnostics"}));
  validate->add_option("file", validate_path, "Document to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*diagnose) return cmd_diagnose(diag_opts);
    if (*serve) return cmd_serve(serve_opts);
    if (*probe) return cmd_probe(probe_opts, probe_count, probe_command, probe_print);
    if (*validate) return cmd_validate(validate_kind, validate_path);
  } catch (const ConfigError& e) {
    std::cerr << "relsim: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "relsim: " << e.what() << "\n";
    return kExitPipeline;
  }
  return kExitConfig;
}
