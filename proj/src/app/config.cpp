#include "relsim/app/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "relsim/examples/quadrotor.hpp"
#include "relsim/oracle.hpp"
#include "schemas_embedded.hpp"

namespace relsim::app {

using nlohmann::json;

namespace {

json radii_to_json(const std::vector<double>& radii) {
  json out = json::array();
  for (double r : radii) {
    if (std::isinf(r)) {
      out.push_back("inf");
    } else {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<double> radii_from_json(const json& j) {
  std::vector<double> out;
  for (const auto& r : j) out.push_back(r.is_string() ? std::numeric_limits<double>::infinity() : r.get<double>());
  return out;
}

// ---- space ----------------------------------------------------------------------

json component_to_json(const NamedComponent& c) {
  json out{{"name", c.name}};
  if (const auto* iv = std::get_if<IntervalBlock>(&c.component)) {
    out["type"] = "interval";
    json bounds = json::array();
    bool degenerate = false;
    for (const auto& d : iv->dims) {
      bounds.push_back({d.lo, d.hi});
      degenerate = degenerate || d.degenerate;
    }
    out["bounds"] = bounds;
    out["degenerate"] = degenerate;
  } else if (const auto* sp = std::get_if<SphereBlock>(&c.component)) {
    out["type"] = "sphere";
    out["n"] = sp->n;
  } else {
    out["type"] = "discrete";
    out["values"] = std::get<DiscreteBlock>(c.component).values;
  }
  return out;
}

NamedComponent component_from_json(const json& j) {
  NamedComponent c;
  c.name = j.at("name").get<std::string>();
  const auto type = j.at("type").get<std::string>();
  if (type == "interval") {
    IntervalBlock block;
    const bool degenerate = j.value("degenerate", false);
    for (const auto& b : j.at("bounds")) block.dims.push_back({b[0].get<double>(), b[1].get<double>(), degenerate});
    c.component = block;
  } else if (type == "sphere") {
    c.component = SphereBlock{j.at("n").get<std::size_t>()};
  } else {
    c.component = DiscreteBlock{j.at("values").get<std::vector<double>>()};
  }
  return c;
}

json space_to_json(const SpaceConfig& s) {
  if (s.example == "vdp") return {{"example", "vdp"}, {"box", s.box}};
  if (s.example == "quadrotor") return {{"example", "quadrotor"}};
  json components = json::array();
  for (const auto& c : s.components) components.push_back(component_to_json(c));
  json separation = json::array();
  for (const auto& sep : s.separation) {
    json radii = json::array();
    for (std::size_t i = 0; i < s.actors; ++i) {
      json row = json::array();
      for (std::size_t k = 0; k < s.actors; ++k) row.push_back(sep.radii[i * s.actors + k]);
      radii.push_back(row);
    }
    separation.push_back({{"coords", sep.coords}, {"radii", radii}});
  }
  return {{"components", components}, {"actors", s.actors}, {"separation", separation}};
}

SpaceConfig space_from_json(const json& j) {
  SpaceConfig s;
  if (j.contains("example")) {
    s.example = j["example"].get<std::string>();
    s.box = j.value("box", 8.0);
    return s;
  }
  for (const auto& c : j.at("components")) s.components.push_back(component_from_json(c));
  s.actors = j.value("actors", std::size_t{1});
  for (const auto& sep : j.value("separation", json::array())) {
    SeparationConstraint c;
    c.coords = sep.at("coords").get<std::vector<std::size_t>>();
    const auto& rows = sep.at("radii");
    if (rows.size() != s.actors) {
      throw ConfigError("separation radii must be a " + std::to_string(s.actors) + " x " +
                        std::to_string(s.actors) + " matrix");
    }
    for (const auto& row : rows) {
      if (row.size() != s.actors) throw ConfigError("separation radii rows must have one entry per actor");
      for (const auto& r : row) c.radii.push_back(r.get<double>());
    }
    s.separation.push_back(std::move(c));
  }
  return s;
}

// ---- oracle ---------------------------------------------------------------------

json vdp_to_json(const VdpProblem& p) {
  return {{"type", "vdp"}, {"h", p.h}, {"u_max", p.u_max}, {"tol", p.tol}, {"max_iterations", p.max_iterations}};
}

VdpProblem vdp_from_json(const json& j) {
  VdpProblem p;
  p.h = j.value("h", p.h);
  p.u_max = j.value("u_max", p.u_max);
  p.tol = j.value("tol", p.tol);
  p.max_iterations = j.value("max_iterations", p.max_iterations);
  return p;
}

json oracle_to_json(const OracleConfig& o) {
  if (o.type == "ball") return {{"type", "ball"}, {"center", o.centers.at(0)}, {"radius", o.radius}, {"coords", o.coords}};
  if (o.type == "islands") return {{"type", "islands"}, {"centers", o.centers}, {"radius", o.radius}, {"coords", o.coords}};
  if (o.type == "constant") return {{"type", "constant"}, {"value", o.value ? 1 : 0}};
  if (o.type == "vdp") return vdp_to_json(o.vdp);
  if (o.type == "quadrotor_synthetic") return {{"type", o.type}, {"radius", o.radius}, {"center", o.centers.at(0)}};
  if (o.type == "external") return {{"type", "external"}, {"command", o.command}};
  return {{"type", "composite"},
          {"base", oracle_to_json(o.base.at(0))},
          {"threads", o.threads},
          {"radii", radii_to_json(o.radii)},
          {"strategy", std::string(to_string(o.strategy))},
          {"concurrent", o.concurrent},
          {"seed", o.seed}};
}

OracleConfig oracle_from_json(const json& j) {
  OracleConfig o;
  o.type = j.at("type").get<std::string>();
  if (o.type == "ball") {
    o.centers = {j.at("center").get<std::vector<double>>()};
  } else if (o.type == "islands") {
    o.centers = j.at("centers").get<std::vector<std::vector<double>>>();
  } else if (o.type == "quadrotor_synthetic") {
    o.centers = {j.value("center", std::vector<double>(6, 0.0))};
  }
  o.radius = j.value("radius", 0.0);
  o.coords = j.value("coords", std::vector<std::size_t>{});
  o.value = j.value("value", 1) == 1;
  if (o.type == "vdp") o.vdp = vdp_from_json(j);
  o.command = j.value("command", std::vector<std::string>{});
  if (o.type == "composite") {
    o.base = {oracle_from_json(j.at("base"))};
    o.threads = j.value("threads", o.threads);
    o.radii = radii_from_json(j.at("radii"));
    o.strategy = parse_composite_strategy(j.value("strategy", std::string(to_string(o.strategy))));
    o.concurrent = j.value("concurrent", false);
    o.seed = j.value("seed", o.seed);
  }
  return o;
}

// ---- estimator ------------------------------------------------------------------

json estimator_to_json(const SubsetConfig& c) {
  json out{{"confidence", c.confidence},
           {"level1_samples", c.level1_samples},
           {"level1_chunks", c.level1_chunks},
           {"level1_interval", std::string(to_string(c.level1_interval))},
           {"batches", c.batches},
           {"steps", c.steps},
           {"rwm_radii", radii_to_json(c.rwm_radii.per_component)},
           {"burn_in", c.burn_in},
           {"seed_mode", std::string(to_string(c.seed_mode))},
           {"honest_budget_per_seed", c.honest_budget_per_seed},
           {"short_circuit", c.short_circuit},
           {"allow_truncation", c.allow_truncation},
           {"latency_seconds", c.latency_seconds}};
  out["variance_bound_constant"] = c.variance_bound_constant ? json(*c.variance_bound_constant) : json(nullptr);
  return out;
}

void estimator_from_json(const json& j, SubsetConfig& c) {
  c.confidence = j.at("confidence").get<double>();
  c.level1_samples = j.at("level1_samples").get<std::uint64_t>();
  c.level1_chunks = j.value("level1_chunks", c.level1_chunks);
  c.level1_interval = parse_interval_method(j.value("level1_interval", std::string("normal")));
  c.batches = j.at("batches").get<std::size_t>();
  c.steps = j.at("steps").get<std::uint64_t>();
  c.rwm_radii = PerturbationRadii{radii_from_json(j.at("rwm_radii"))};
  c.burn_in = j.value("burn_in", c.burn_in);
  c.seed_mode = parse_seed_mode(j.value("seed_mode", std::string("honest")));
  c.honest_budget_per_seed = j.value("honest_budget_per_seed", c.honest_budget_per_seed);
  c.short_circuit = j.value("short_circuit", c.short_circuit);
  c.allow_truncation = j.value("allow_truncation", c.allow_truncation);
  c.latency_seconds = j.value("latency_seconds", c.latency_seconds);
  if (j.contains("variance_bound_constant") && !j["variance_bound_constant"].is_null()) {
    c.variance_bound_constant = j["variance_bound_constant"].get<double>();
  }
}

json diagnostics_to_json(const DiagnosticsConfig& d) {
  return {{"enabled", d.enabled},         {"pilots", d.pilots},       {"basis", std::string(to_string(d.basis))},
          {"honest_samples", d.honest_samples}, {"max_level", d.max_level}, {"confidence", d.confidence}};
}

DiagnosticsConfig diagnostics_from_json(const json& j) {
  DiagnosticsConfig d;
  d.enabled = j.value("enabled", d.enabled);
  d.pilots = j.value("pilots", d.pilots);
  d.basis = parse_pilot_basis(j.value("basis", std::string("trig")));
  d.honest_samples = j.value("honest_samples", d.honest_samples);
  d.max_level = j.value("max_level", d.max_level);
  d.confidence = j.value("confidence", d.confidence);
  return d;
}

JsonSchema load_embedded(const char* text) { return JsonSchema(json::parse(text)); }

}  // namespace

// ---- building ---------------------------------------------------------------------

StateSpace build_space(const SpaceConfig& config) {
  if (config.example == "vdp") {
    VdpProblem p;
    p.box = config.box;
    return vdp_statespace(p);
  }
  if (config.example == "quadrotor") return quad_statespace();
  if (!config.example.empty()) throw ConfigError("unknown example space '" + config.example + "'");
  return StateSpace(config.components, config.actors, config.separation);
}

std::unique_ptr<ReliabilityOracle> build_oracle(const OracleConfig& o, const StateSpace& space,
                                                const SpaceConfig& space_config) {
  if (o.type == "ball" || o.type == "islands") {
    return std::make_unique<IslandsOracle>(islands_oracle(space, o.centers, o.radius, o.coords));
  }
  if (o.type == "constant") return std::make_unique<ConstantOracle>(o.value);
  if (o.type == "quadrotor_synthetic") {
    if (space_config.example != "quadrotor") throw ConfigError("oracle quadrotor_synthetic needs the quadrotor space");
    return std::make_unique<IslandsOracle>(quad_synthetic_oracle(space, o.radius, o.centers.at(0)));
  }
  if (o.type == "external") return std::make_unique<ExternalProcessOracle>(o.command);
  if (o.type == "vdp" || o.type == "composite") {
    if (space_config.example != "vdp") throw ConfigError("oracle " + o.type + " needs the vdp space");
    VdpProblem problem = o.type == "vdp" ? o.vdp : o.base.at(0).vdp;
    problem.box = space_config.box;
    problem.validate();
    if (o.type == "vdp") return vdp_oracle(problem);
    VdpController base(problem);
    CompositeConfig cc{o.threads, PerturbationRadii{o.radii}, o.strategy, o.concurrent};
    return std::make_unique<CompositeOracle>(CompositeController(base, space, cc), o.seed);
  }
  throw ConfigError("unknown oracle type '" + o.type + "'");
}

// ---- parse / serialize -------------------------------------------------------------

ExperimentConfig parse_config(const json& document) {
  const auto violations = config_schema().validate(document);
  if (!violations.empty()) throw SchemaError("config does not match the schema:\n" + describe(violations), violations);

  ExperimentConfig c;
  c.schema_version = document.at("schema_version").get<int>();
  c.name = document.value("name", std::string());
  c.description = document.value("description", std::string());
  c.space = space_from_json(document.at("space"));
  c.oracle = oracle_from_json(document.at("oracle"));
  const auto& m = document.at("model");
  c.model.kind = parse_model_kind(m.at("kind").get<std::string>());
  c.model.length = m.at("length").get<std::size_t>();
  c.model.perturbation = PerturbationRadii{radii_from_json(m.at("perturbation"))};
  estimator_from_json(document.at("estimator"), c.estimator);
  c.estimator.seed = document.value("seed", c.estimator.seed);
  c.estimator.workers = document.value("workers", std::size_t{0});
  c.estimator.diagnostics = diagnostics_from_json(document.value("diagnostics", json::object()));
  const auto sampling = document.value("sampling", json::object());
  c.estimator.sampling.burn_in = sampling.value("burn_in", c.estimator.sampling.burn_in);
  c.estimator.sampling.max_initial_attempts =
      sampling.value("max_initial_attempts", c.estimator.sampling.max_initial_attempts);
  c.estimator.sampling.retry_cap = sampling.value("retry_cap", c.estimator.sampling.retry_cap);
  c.out_dir = document.value("out_dir", c.out_dir);

  // Semantic checks: everything the run will construct is constructed here.
  const StateSpace space = build_space(c.space);
  c.model.validate(space);
  c.estimator.validate(c.model, space);
  build_oracle(c.oracle, space, c.space);
  return c;
}

ExperimentConfig parse_config_text(std::string_view text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(document);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

json to_json(const ExperimentConfig& c, bool include_execution) {
  json out{{"schema_version", c.schema_version},
           {"name", c.name},
           {"description", c.description},
           {"seed", c.estimator.seed},
           {"space", space_to_json(c.space)},
           {"oracle", oracle_to_json(c.oracle)},
           {"model",
            {{"kind", std::string(to_string(c.model.kind))},
             {"length", c.model.length},
             {"perturbation", radii_to_json(c.model.perturbation.per_component)}}},
           {"estimator", estimator_to_json(c.estimator)},
           {"diagnostics", diagnostics_to_json(c.estimator.diagnostics)},
           {"sampling",
            {{"burn_in", c.estimator.sampling.burn_in},
             {"max_initial_attempts", c.estimator.sampling.max_initial_attempts},
             {"retry_cap", c.estimator.sampling.retry_cap}}}};
  if (include_execution) {
    out["workers"] = c.estimator.workers;
    out["out_dir"] = c.out_dir;
  }
  return out;
}

std::string serialize(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

const JsonSchema& config_schema() {
  static const JsonSchema s = load_embedded(schemas::kConfig);
  return s;
}

const JsonSchema& report_schema() {
  static const JsonSchema s = load_embedded(schemas::kReport);
  return s;
}

const JsonSchema& diagnostics_schema() {
  static const JsonSchema s = load_embedded(schemas::kDiagnostics);
  return s;
}

}  // namespace relsim::app
