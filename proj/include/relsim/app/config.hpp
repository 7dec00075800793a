#pragma once

// Experiment configuration: one JSON document describing the space, the
// oracle, the chain model and the estimator settings. Parsing validates the
// document against the shipped schema first and then checks it semantically
// by constructing every object the run needs, so an accepted config cannot
// fail for configuration reasons once the pipeline starts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "relsim/app/json_schema.hpp"
#include "relsim/chain.hpp"
#include "relsim/controllers.hpp"
#include "relsim/errors.hpp"
#include "relsim/examples/vdp.hpp"
#include "relsim/pipeline.hpp"
#include "relsim/statespace.hpp"

namespace relsim::app {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

/// The document is not valid JSON or violates the config schema.
class SchemaError : public ConfigError {
 public:
  explicit SchemaError(const std::string& what, std::vector<SchemaViolation> violations = {})
      : ConfigError(what), violations_(std::move(violations)) {}
  const std::vector<SchemaViolation>& violations() const noexcept { return violations_; }

 private:
  std::vector<SchemaViolation> violations_;
};

struct SpaceConfig {
  /// "vdp", "quadrotor", or empty for an explicit component list.
  std::string example;
  /// Half-width of the Van der Pol sampling box.
  double box = 8.0;
  std::vector<NamedComponent> components;
  std::size_t actors = 1;
  std::vector<SeparationConstraint> separation;
};

struct OracleConfig {
  /// ball | islands | constant | vdp | quadrotor_synthetic | external | composite
  std::string type;
  std::vector<std::vector<double>> centers;
  double radius = 0.0;
  /// Empty selects every interval coordinate.
  std::vector<std::size_t> coords;
  bool value = true;
  VdpProblem vdp;
  std::vector<std::string> command;

  // composite
  std::vector<OracleConfig> base;
  std::size_t threads = 3;
  std::vector<double> radii;
  CompositeStrategy strategy = CompositeStrategy::PerturbGuess;
  bool concurrent = false;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name;
  std::string description;
  SpaceConfig space;
  OracleConfig oracle;
  ChainModel model;
  /// Estimator settings, including the master seed and the worker count.
  SubsetConfig estimator;
  std::string out_dir = "out";
};

/// Schema check, then semantic check. Throws SchemaError or ConfigError.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved document (every default written out). With
/// `include_execution` false the worker count and output directory are left
/// out; those never change results.
nlohmann::json to_json(const ExperimentConfig& config, bool include_execution = true);
std::string serialize(const ExperimentConfig& config);

/// Equality of the resolved documents.
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

StateSpace build_space(const SpaceConfig& config);
/// Throws ConfigError when the oracle does not fit the space.
std::unique_ptr<ReliabilityOracle> build_oracle(const OracleConfig& config, const StateSpace& space,
                                                const SpaceConfig& space_config);

const JsonSchema& config_schema();
const JsonSchema& report_schema();
const JsonSchema& diagnostics_schema();

}  // namespace relsim::app
