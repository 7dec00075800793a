#include "relsim/app/json_schema.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace relsim::app {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keywords() {
  static const std::set<std::string> k{
      "$schema", "$id", "$defs", "$ref", "title", "description", "default", "type", "enum", "const",
      "properties", "required", "additionalProperties", "items", "minItems", "maxItems", "minimum",
      "maximum", "exclusiveMinimum", "exclusiveMaximum", "minLength", "anyOf", "oneOf"};
  return k;
}

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

bool has_type(const json& value, const std::string& type) {
  if (type == "null") return value.is_null();
  if (type == "boolean") return value.is_boolean();
  if (type == "string") return value.is_string();
  if (type == "array") return value.is_array();
  if (type == "object") return value.is_object();
  if (type == "number") return value.is_number();
  if (type == "integer") {
    if (value.is_number_integer()) return true;
    if (!value.is_number_float()) return false;
    const double d = value.get<double>();
    return std::isfinite(d) && std::floor(d) == d;
  }
  throw std::invalid_argument("json schema: unknown type '" + type + "'");
}

}  // namespace

JsonSchema::JsonSchema(json schema) : schema_(std::move(schema)) { check_schema(schema_, "#"); }

void JsonSchema::check_schema(const json& node, const std::string& where) const {
  if (node.is_boolean()) return;
  if (!node.is_object()) throw std::invalid_argument("json schema: " + where + " is not a schema");
  for (const auto& [key, sub] : node.items()) {
    if (!known_keywords().contains(key)) {
      throw std::invalid_argument("json schema: unsupported keyword '" + key + "' at " + where);
    }
    if (key == "$ref") {
      resolve(sub.get<std::string>());
    } else if (key == "$defs" || key == "properties") {
      for (const auto& [name, s] : sub.items()) check_schema(s, where + "/" + key + "/" + name);
    } else if (key == "items" || key == "additionalProperties") {
      check_schema(sub, where + "/" + key);
    } else if (key == "anyOf" || key == "oneOf") {
      for (std::size_t i = 0; i < sub.size(); ++i) check_schema(sub[i], where + "/" + key + "/" + std::to_string(i));
    } else if (key == "type") {
      const auto types = sub.is_array() ? sub : json::array({sub});
      for (const auto& t : types) has_type(json(), t.get<std::string>());
    }
  }
}

const json& JsonSchema::resolve(const std::string& ref) const {
  const std::string prefix = "#/$defs/";
  if (ref.rfind(prefix, 0) != 0) throw std::invalid_argument("json schema: unsupported $ref '" + ref + "'");
  const std::string name = ref.substr(prefix.size());
  if (!schema_.contains("$defs") || !schema_["$defs"].contains(name)) {
    throw std::invalid_argument("json schema: unresolved $ref '" + ref + "'");
  }
  return schema_["$defs"][name];
}

std::vector<SchemaViolation> JsonSchema::validate(const json& instance) const {
  std::vector<SchemaViolation> out;
  validate_node(schema_, instance, "", out);
  return out;
}

void JsonSchema::validate_node(const json& schema, const json& value, const std::string& path,
                               std::vector<SchemaViolation>& out) const {
  if (schema.is_boolean()) {
    if (!schema.get<bool>()) out.push_back({path, "no value is allowed here"});
    return;
  }
  auto fail = [&](std::string msg) { out.push_back({path, std::move(msg)}); };

  if (schema.contains("$ref")) validate_node(resolve(schema["$ref"].get<std::string>()), value, path, out);

  if (schema.contains("type")) {
    const auto& t = schema["type"];
    const auto types = t.is_array() ? t : json::array({t});
    bool ok = false;
    for (const auto& name : types) ok = ok || has_type(value, name.get<std::string>());
    if (!ok) {
      fail("expected type " + t.dump() + ", got " + std::string(value.type_name()));
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == value;
    if (!found) fail("value " + value.dump() + " is not one of " + schema["enum"].dump());
  }
  if (schema.contains("const") && schema["const"] != value) {
    fail("value must be " + schema["const"].dump());
  }

  if (value.is_number()) {
    const double v = value.get<double>();
    if (schema.contains("minimum") && v < schema["minimum"].get<double>()) {
      fail("value " + value.dump() + " is below the minimum " + schema["minimum"].dump());
    }
    if (schema.contains("maximum") && v > schema["maximum"].get<double>()) {
      fail("value " + value.dump() + " is above the maximum " + schema["maximum"].dump());
    }
    if (schema.contains("exclusiveMinimum") && v <= schema["exclusiveMinimum"].get<double>()) {
      fail("value " + value.dump() + " must exceed " + schema["exclusiveMinimum"].dump());
    }
    if (schema.contains("exclusiveMaximum") && v >= schema["exclusiveMaximum"].get<double>()) {
      fail("value " + value.dump() + " must be below " + schema["exclusiveMaximum"].dump());
    }
  }
  if (value.is_string() && schema.contains("minLength") &&
      value.get<std::string>().size() < schema["minLength"].get<std::size_t>()) {
    fail("string is shorter than " + schema["minLength"].dump());
  }

  if (value.is_array()) {
    if (schema.contains("minItems") && value.size() < schema["minItems"].get<std::size_t>()) {
      fail("array has fewer than " + schema["minItems"].dump() + " items");
    }
    if (schema.contains("maxItems") && value.size() > schema["maxItems"].get<std::size_t>()) {
      fail("array has more than " + schema["maxItems"].dump() + " items");
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        validate_node(schema["items"], value[i], path + "/" + std::to_string(i), out);
      }
    }
  }

  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!value.contains(key.get<std::string>())) fail("missing required property '" + key.get<std::string>() + "'");
      }
    }
    const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    for (const auto& [key, sub] : value.items()) {
      const std::string child = path + "/" + escape_token(key);
      if (props && props->contains(key)) {
        validate_node((*props)[key], sub, child, out);
      } else if (schema.contains("additionalProperties")) {
        const auto& extra = schema["additionalProperties"];
        if (extra.is_boolean() && !extra.get<bool>()) {
          out.push_back({child, "unknown property '" + key + "'"});
        } else {
          validate_node(extra, sub, child, out);
        }
      }
    }
  }

  if (schema.contains("anyOf")) {
    bool any = false;
    for (const auto& alt : schema["anyOf"]) {
      std::vector<SchemaViolation> tmp;
      validate_node(alt, value, path, tmp);
      if (tmp.empty()) {
        any = true;
        break;
      }
    }
    if (!any) fail("value matches none of the allowed alternatives");
  }
  if (schema.contains("oneOf")) {
    std::size_t matches = 0;
    std::vector<SchemaViolation> best;
    bool first = true;
    for (const auto& alt : schema["oneOf"]) {
      std::vector<SchemaViolation> tmp;
      validate_node(alt, value, path, tmp);
      if (tmp.empty()) {
        ++matches;
      } else if (first || tmp.size() < best.size()) {
        best = std::move(tmp);
        first = false;
      }
    }
    if (matches == 0) {
      // Report the closest alternative; it is usually the intended one.
      out.insert(out.end(), best.begin(), best.end());
      if (best.empty()) fail("value matches none of the alternatives");
    } else if (matches > 1) {
      fail("value matches more than one alternative");
    }
  }
}

std::string describe(const std::vector<SchemaViolation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += '\n';
    out += (v.path.empty() ? "/" : v.path) + ": " + v.message;
  }
  return out;
}

}  // namespace relsim::app
