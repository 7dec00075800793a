#pragma once

// Validation of JSON documents against the schemas shipped with the runner.
//
// Supported keywords (JSON Schema 2020-12 subset): type, enum, const,
// properties, required, additionalProperties, items, minItems, maxItems,
// minimum, maximum, exclusiveMinimum, exclusiveMaximum, minLength, anyOf,
// oneOf, $ref to "#/$defs/<name>", and the annotations $schema, $id, $defs,
// title, description, default. Any other keyword makes the schema itself
// invalid, so a typo in a schema cannot silently weaken it.

#include <string>
#include <vector>

#include "json.hpp"

namespace relsim::app {

struct SchemaViolation {
  /// JSON pointer into the instance, "" for the root.
  std::string path;
  std::string message;
};

class JsonSchema {
 public:
  /// Throws std::invalid_argument when the schema uses an unsupported keyword
  /// or an unresolvable $ref.
  explicit JsonSchema(nlohmann::json schema);

  std::vector<SchemaViolation> validate(const nlohmann::json& instance) const;
  bool valid(const nlohmann::json& instance) const { return validate(instance).empty(); }

  const nlohmann::json& document() const noexcept { return schema_; }

 private:
  void check_schema(const nlohmann::json& node, const std::string& where) const;
  void validate_node(const nlohmann::json& schema, const nlohmann::json& value, const std::string& path,
                     std::vector<SchemaViolation>& out) const;
  const nlohmann::json& resolve(const std::string& ref) const;

  nlohmann::json schema_;
};

/// "path: message" lines joined with newlines.
std::string describe(const std::vector<SchemaViolation>& violations);

}  // namespace relsim::app
