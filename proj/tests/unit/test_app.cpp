#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "relsim/app/config.hpp"
#include "relsim/app/json_schema.hpp"
#include "relsim/app/report.hpp"

using namespace relsim;
using namespace relsim::app;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigDir = RELSIM_SOURCE_DIR "/configs";

json small_ball() {
  return json::parse(R"({
    "schema_version": 1,
    "name": "small-ball",
    "seed": 5,
    "space": {"components": [{"name": "x", "type": "interval", "bounds": [[-1, 1], [-1, 1]]}]},
    "oracle": {"type": "ball", "center": [0, 0], "radius": 0.3},
    "model": {"kind": "latency_budget", "length": 2, "perturbation": [0.05]},
    "estimator": {"confidence": 0.99, "level1_samples": 20000, "batches": 8, "steps": 500,
                  "rwm_radii": [0.3], "latency_seconds": 0.01},
    "diagnostics": {"enabled": true, "honest_samples": 60}
  })");
}

ReliabilityReport run(const ExperimentConfig& c) {
  const StateSpace space = build_space(c.space);
  auto oracle = build_oracle(c.oracle, space, c.space);
  return run_subset_simulation(c.model, space, *oracle, c.estimator);
}

template <class Mutate>
json mutated(Mutate m) {
  json j = small_ball();
  m(j);
  return j;
}

}  // namespace

TEST_CASE("shipped configs parse and round-trip") {
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kConfigDir)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    CAPTURE(entry.path().string());
    const ExperimentConfig a = load_config(entry.path());
    const std::string text = serialize(a);
    const ExperimentConfig b = parse_config_text(text);
    CHECK(a == b);
    CHECK(serialize(b) == text);
    CHECK(config_schema().valid(to_json(a, false)));
  }
  CHECK(count >= 5);
}

TEST_CASE("defaults are written out when resolving") {
  const auto c = parse_config(small_ball());
  const json resolved = to_json(c);
  CHECK(resolved["estimator"]["level1_chunks"] == 16);
  CHECK(resolved["estimator"]["seed_mode"] == "honest");
  CHECK(resolved["diagnostics"]["pilots"] == 5);
  CHECK(resolved["diagnostics"]["honest_samples"] == 60);
  CHECK(resolved["workers"] == 0);
  CHECK_FALSE(to_json(c, false).contains("workers"));
  CHECK(c.estimator.seed == 5);
}

TEST_CASE("infinite radii survive the round trip") {
  json j = small_ball();
  j["space"]["components"].push_back({{"name", "mode"}, {"type", "discrete"}, {"values", {1, 2, 3}}});
  j["model"]["perturbation"] = {0.05, "inf"};
  j["estimator"]["rwm_radii"] = {0.3, 1};
  j["oracle"]["coords"] = {0, 1};
  const auto c = parse_config(j);
  CHECK(std::isinf(c.model.perturbation.per_component[1]));
  CHECK(parse_config_text(serialize(c)) == c);
}

TEST_CASE("schema violations") {
  auto expect_schema_error = [](const json& j) { CHECK_THROWS_AS(parse_config(j), SchemaError); };
  expect_schema_error(mutated([](json& j) { j["unknown"] = 1; }));
  expect_schema_error(mutated([](json& j) { j.erase("model"); }));
  expect_schema_error(mutated([](json& j) { j["schema_version"] = 2; }));
  expect_schema_error(mutated([](json& j) { j["estimator"]["confidence"] = 1.0; }));
  expect_schema_error(mutated([](json& j) { j["estimator"]["batches"] = "many"; }));
  expect_schema_error(mutated([](json& j) { j["estimator"]["batches"] = 2.5; }));
  expect_schema_error(mutated([](json& j) { j["model"]["kind"] = "star"; }));
  expect_schema_error(mutated([](json& j) { j["model"]["perturbation"] = {-0.1}; }));
  expect_schema_error(mutated([](json& j) { j["oracle"] = {{"type", "ball"}, {"radius", 0.3}}; }));
  expect_schema_error(mutated([](json& j) { j["oracle"]["type"] = "oracle-of-delphi"; }));
  CHECK_THROWS_AS(parse_config_text("{ not json"), SchemaError);

  try {
    parse_config(mutated([](json& j) { j["estimator"]["steps"] = 0; }));
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    REQUIRE_FALSE(e.violations().empty());
    CHECK(e.violations().front().path == "/estimator/steps");
  }
}

TEST_CASE("semantic violations") {
  // Valid shape, wrong meaning: these surface as ConfigError but not SchemaError.
  auto expect_config_error = [](const json& j) {
    try {
      parse_config(j);
      FAIL("expected a config error");
    } catch (const SchemaError&) {
      FAIL("semantic error reported as schema error");
    } catch (const ConfigError&) {
    }
  };
  expect_config_error(mutated([](json& j) { j["model"]["perturbation"] = {0.05, 0.05}; }));
  expect_config_error(mutated([](json& j) { j["oracle"]["center"] = {0.9, 0.0}; }));
  expect_config_error(mutated([](json& j) { j["space"]["components"][0]["bounds"] = {{1, -1}, {-1, 1}}; }));
  expect_config_error(mutated([](json& j) { j["oracle"] = {{"type", "vdp"}}; }));
  expect_config_error(mutated([](json& j) {
    j["space"] = {{"example", "vdp"}};
    j["oracle"] = {{"type", "composite"}, {"base", {{"type", "vdp"}}}, {"radii", {0.3}}};
  }));
}

TEST_CASE("json schema validator") {
  CHECK_THROWS_AS(JsonSchema(json::parse(R"({"type": "object", "patternProperties": {}})")), std::invalid_argument);
  CHECK_THROWS_AS(JsonSchema(json::parse(R"({"$ref": "#/$defs/missing"})")), std::invalid_argument);
  CHECK_THROWS_AS(JsonSchema(json::parse(R"({"type": "integr"})")), std::invalid_argument);

  const JsonSchema s(json::parse(R"({
    "type": "object",
    "properties": {"a": {"$ref": "#/$defs/pos"}, "b": {"oneOf": [{"type": "string"}, {"type": "integer"}]}},
    "additionalProperties": false,
    "$defs": {"pos": {"type": "number", "exclusiveMinimum": 0}}
  })"));
  CHECK(s.valid(json::parse(R"({"a": 1, "b": "x"})")));
  CHECK(s.valid(json::parse(R"({"a": 1e-9, "b": 3})")));
  CHECK_FALSE(s.valid(json::parse(R"({"a": 0})")));
  CHECK_FALSE(s.valid(json::parse(R"({"b": 1.5})")));
  CHECK_FALSE(s.valid(json::parse(R"({"c": 1})")));
  const auto v = s.validate(json::parse(R"({"a": -1, "c~/": 1})"));
  REQUIRE(v.size() == 2);
  CHECK(describe(v).find("/c~0~1") != std::string::npos);
}

TEST_CASE("report documents") {
  const auto c = parse_config(small_ball());
  const auto report = run(c);
  const json doc = report_to_json(report, c);
  CHECK(describe(report_schema().validate(doc)).empty());
  CHECK(config_schema().valid(doc["config"]));
  CHECK(doc["build_id"].get<std::string>() == build_id());
  CHECK(doc["product"]["upper_bound"].get<double>() == report.product.upper_bound);
  CHECK(doc["diagnostics"]["label"].get<std::string>().find("not sufficient") != std::string::npos);
  CHECK(doc["diagnostics"]["levels"].size() == 1);
  CHECK(doc["notes"].size() == 1);

  // The CSV holds every batch and its means reproduce each level estimate.
  std::istringstream csv(batches_csv(report));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "level,batch,mean,samples,failures");
  std::vector<std::vector<double>> means(3);
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string level, batch, mean;
    std::getline(fields, level, ',');
    std::getline(fields, batch, ',');
    std::getline(fields, mean, ',');
    means.at(std::stoul(level)).push_back(std::stod(mean));
  }
  CHECK(rows == report.levels[0].batches.size() + report.levels[1].batches.size());
  const double z2 = std::accumulate(means[2].begin(), means[2].end(), 0.0) / static_cast<double>(means[2].size());
  CHECK(z2 == doctest::Approx(report.levels[1].estimate).epsilon(1e-15));

  const std::string summary = summary_text(report, c);
  CHECK(summary.find("time between failures: " + report.time_between_failures.text) != std::string::npos);
  CHECK(summary.find("diagnostics level 2") != std::string::npos);
}

TEST_CASE("vdp reports disclose solver dependence") {
  const auto c = load_config(kConfigDir / "vdp_latency.json");
  const auto notes = report_notes(c);
  REQUIRE(notes.size() == 2);
  CHECK(notes[1].find("specific to that solver") != std::string::npos);
}

TEST_CASE("report bytes do not depend on the worker count") {
  auto c = parse_config(small_ball());
  std::vector<std::string> docs;
  for (std::size_t w : {1, 3, 8}) {
    c.estimator.workers = w;
    docs.push_back(dump_document(report_to_json(run(c), c)));
  }
  CHECK(docs[0] == docs[1]);
  CHECK(docs[0] == docs[2]);
}

TEST_CASE("atomic writes leave nothing behind on failure") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "relsim_test_atomic";
  fs::remove_all(dir);
  write_files_atomically(dir, {{"a.txt", "1"}, {"b.txt", "2"}});
  CHECK(fs::exists(dir / "a.txt"));
  CHECK(fs::exists(dir / "b.txt"));

  // A directory in the way of the second file makes the rename fail.
  fs::remove_all(dir);
  fs::create_directories(dir / "b.txt" / "blocker");
  CHECK_THROWS(write_files_atomically(dir, {{"a.txt", "1"}, {"b.txt", "2"}}));
  CHECK_FALSE(fs::exists(dir / ".a.txt.tmp"));
  CHECK_FALSE(fs::exists(dir / ".b.txt.tmp"));
  fs::remove_all(dir);
}
