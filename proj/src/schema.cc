// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/schema.hh"

#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ihrm {

using nlohmann::json;

double AttributeSpec::strength() const {
  if (!prior_strength) {
    throw SchemaError("attribute '" + name + "' has no prior_strength");
  }
  return *prior_strength;
}

int EntityClassSpec::attribute_index(std::string_view attribute) const {
  for (size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].name == attribute) return static_cast<int>(i);
  }
  return -1;
}

int Schema::entity_class_index(std::string_view name) const {
  for (size_t i = 0; i < entity_classes.size(); ++i) {
    if (entity_classes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int Schema::relation_class_index(std::string_view name) const {
  for (size_t i = 0; i < relation_classes.size(); ++i) {
    if (relation_classes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::string_view to_string(MissingPolicy policy) {
  return policy == MissingPolicy::kClosedWorld ? "closed_world" : "open_world";
}

std::string_view to_string(Symmetry symmetry) {
  return symmetry == Symmetry::kSymmetric ? "symmetric" : "directed";
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw SchemaError(path + ": " + message);
}

void check_keys(const json& object, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!object.is_object()) fail(path, "expected an object");
  for (const auto& [key, unused] : object.items()) {
    if (!allowed.contains(key)) fail(path, "unknown key '" + key + "'");
  }
}

const json& require(const json& object, const std::string& path,
                    const char* key) {
  auto it = object.find(key);
  if (it == object.end()) {
    fail(path, std::string("missing required key '") + key + "'");
  }
  return *it;
}

std::string get_string(const json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "expected a string");
  return value.get<std::string>();
}

double get_number(const json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  return value.get<double>();
}

int get_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) fail(path, "expected an integer");
  return value.get<int>();
}

AttributeSpec parse_attribute(const json& node, const std::string& path) {
  check_keys(node, path,
             {"name", "cardinality", "prior_strength", "prior_base"});
  AttributeSpec attribute;
  attribute.name = get_string(require(node, path, "name"), path + ".name");
  attribute.cardinality =
      get_int(require(node, path, "cardinality"), path + ".cardinality");
  if (auto it = node.find("prior_strength"); it != node.end()) {
    attribute.prior_strength = get_number(*it, path + ".prior_strength");
  }
  if (auto it = node.find("prior_base"); it != node.end()) {
    if (!it->is_array()) fail(path + ".prior_base", "expected an array");
    for (size_t i = 0; i < it->size(); ++i) {
      attribute.prior_base.push_back(get_number(
          (*it)[i], path + ".prior_base[" + std::to_string(i) + "]"));
    }
  } else if (attribute.cardinality > 0) {
    attribute.prior_base.assign(attribute.cardinality,
                                1.0 / attribute.cardinality);
  }
  return attribute;
}

json attribute_to_json(const AttributeSpec& attribute) {
  json node = {{"name", attribute.name},
               {"cardinality", attribute.cardinality}};
  if (attribute.prior_strength) {
    node["prior_strength"] = *attribute.prior_strength;
  }
  node["prior_base"] = attribute.prior_base;
  return node;
}

void validate_attribute(const AttributeSpec& attribute, const std::string& path,
                        ValidationReport& report) {
  if (attribute.name.empty()) report.push_back({path, "empty name"});
  if (attribute.cardinality < 2) {
    report.push_back({path, "cardinality must be at least 2"});
  }
  if (attribute.prior_strength &&
      !(*attribute.prior_strength > 0.0 &&
        std::isfinite(*attribute.prior_strength))) {
    report.push_back({path, "prior_strength must be positive"});
  }
  if (static_cast<int>(attribute.prior_base.size()) != attribute.cardinality) {
    report.push_back({path, "prior_base length differs from cardinality"});
  }
  double total = 0.0;
  bool negative = false;
  for (double weight : attribute.prior_base) {
    if (!(weight >= 0.0)) negative = true;
    total += weight;
  }
  if (negative) report.push_back({path, "prior_base has a negative entry"});
  if (std::abs(total - 1.0) > 1e-12) {
    report.push_back({path, "prior_base sums to " + std::to_string(total) +
                                ", not 1"});
  }
}

std::pair<int, int> line_and_column(std::string_view text, size_t byte) {
  int line = 1;
  int column = 1;
  for (size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

Schema parse_schema(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, column] = line_and_column(text, e.byte);
    std::ostringstream message;
    message << "syntax error at line " << line << ", column " << column
            << ": " << e.what();
    throw SchemaError(message.str());
  }
  check_keys(root, "schema", {"entity_classes", "relation_classes"});

  Schema schema;
  const json& classes = require(root, "schema", "entity_classes");
  if (!classes.is_array()) fail("entity_classes", "expected an array");
  for (size_t i = 0; i < classes.size(); ++i) {
    const std::string path = "entity_classes[" + std::to_string(i) + "]";
    const json& node = classes[i];
    check_keys(node, path, {"name", "attributes", "concentration"});
    EntityClassSpec entity;
    entity.name = get_string(require(node, path, "name"), path + ".name");
    if (auto it = node.find("concentration"); it != node.end()) {
      entity.concentration = get_number(*it, path + ".concentration");
    }
    if (auto it = node.find("attributes"); it != node.end()) {
      if (!it->is_array()) fail(path + ".attributes", "expected an array");
      for (size_t a = 0; a < it->size(); ++a) {
        entity.attributes.push_back(parse_attribute(
            (*it)[a], path + ".attributes[" + std::to_string(a) + "]"));
      }
    }
    schema.entity_classes.push_back(std::move(entity));
  }

  if (auto it = root.find("relation_classes"); it != root.end()) {
    if (!it->is_array()) fail("relation_classes", "expected an array");
    for (size_t i = 0; i < it->size(); ++i) {
      const std::string path = "relation_classes[" + std::to_string(i) + "]";
      const json& node = (*it)[i];
      check_keys(node, path,
                 {"name", "subject", "object", "attribute", "missing_policy",
                  "symmetry"});
      RelationClassSpec relation;
      relation.name = get_string(require(node, path, "name"), path + ".name");
      relation.subject_class =
          get_string(require(node, path, "subject"), path + ".subject");
      relation.object_class =
          get_string(require(node, path, "object"), path + ".object");
      relation.attribute = parse_attribute(require(node, path, "attribute"),
                                           path + ".attribute");
      const std::string policy = get_string(
          require(node, path, "missing_policy"), path + ".missing_policy");
      if (policy == "open_world") {
        relation.missing_policy = MissingPolicy::kOpenWorld;
      } else if (policy == "closed_world") {
        relation.missing_policy = MissingPolicy::kClosedWorld;
      } else {
        fail(path + ".missing_policy", "unknown policy '" + policy + "'");
      }
      if (auto s = node.find("symmetry"); s != node.end()) {
        const std::string symmetry = get_string(*s, path + ".symmetry");
        if (symmetry == "directed") {
          relation.symmetry = Symmetry::kDirected;
        } else if (symmetry == "symmetric") {
          relation.symmetry = Symmetry::kSymmetric;
        } else {
          fail(path + ".symmetry", "unknown symmetry '" + symmetry + "'");
        }
      }
      schema.relation_classes.push_back(std::move(relation));
    }
  }

  ValidationReport report = validate_schema(schema);
  if (!report.empty()) throw SchemaError(format_report(report));
  return schema;
}

std::string serialize_schema(const Schema& schema) {
  json root = {{"entity_classes", json::array()},
               {"relation_classes", json::array()}};
  for (const auto& entity : schema.entity_classes) {
    json attributes = json::array();
    for (const auto& attribute : entity.attributes) {
      attributes.push_back(attribute_to_json(attribute));
    }
    root["entity_classes"].push_back({{"name", entity.name},
                                      {"concentration", entity.concentration},
                                      {"attributes", attributes}});
  }
  for (const auto& relation : schema.relation_classes) {
    root["relation_classes"].push_back(
        {{"name", relation.name},
         {"subject", relation.subject_class},
         {"object", relation.object_class},
         {"attribute", attribute_to_json(relation.attribute)},
         {"missing_policy", to_string(relation.missing_policy)},
         {"symmetry", to_string(relation.symmetry)}});
  }
  return root.dump(2);
}

ValidationReport validate_schema(const Schema& schema) {
  ValidationReport report;
  std::set<std::string> names;
  auto claim_name = [&](const std::string& name, const std::string& path) {
    if (name.empty()) {
      report.push_back({path, "empty name"});
    } else if (!names.insert(name).second) {
      report.push_back({path, "duplicate class name '" + name + "'"});
    }
  };

  for (size_t i = 0; i < schema.entity_classes.size(); ++i) {
    const auto& entity = schema.entity_classes[i];
    const std::string path = "entity_classes[" + std::to_string(i) + "]";
    claim_name(entity.name, path);
    if (!(entity.concentration > 0.0 && std::isfinite(entity.concentration))) {
      report.push_back({path, "concentration must be positive"});
    }
    std::set<std::string> attribute_names;
    for (size_t a = 0; a < entity.attributes.size(); ++a) {
      const std::string attribute_path =
          path + ".attributes[" + std::to_string(a) + "]";
      const auto& attribute = entity.attributes[a];
      if (!attribute_names.insert(attribute.name).second) {
        report.push_back({attribute_path, "duplicate attribute name '" +
                                              attribute.name + "'"});
      }
      validate_attribute(attribute, attribute_path, report);
    }
  }

  for (size_t i = 0; i < schema.relation_classes.size(); ++i) {
    const auto& relation = schema.relation_classes[i];
    const std::string path = "relation_classes[" + std::to_string(i) + "]";
    claim_name(relation.name, path);
    if (schema.entity_class_index(relation.subject_class) < 0) {
      report.push_back({path + ".subject", "undeclared entity class '" +
                                               relation.subject_class + "'"});
    }
    if (schema.entity_class_index(relation.object_class) < 0) {
      report.push_back({path + ".object", "undeclared entity class '" +
                                              relation.object_class + "'"});
    }
    if (relation.symmetric() && !relation.self_relation()) {
      report.push_back({path, "symmetry requires self-relation"});
    }
    validate_attribute(relation.attribute, path + ".attribute", report);
  }
  return report;
}

std::vector<std::string> missing_prior_strengths(const Schema& schema) {
  std::vector<std::string> missing;
  for (const auto& entity : schema.entity_classes) {
    for (const auto& attribute : entity.attributes) {
      if (!attribute.prior_strength) {
        missing.push_back(entity.name + "." + attribute.name);
      }
    }
  }
  for (const auto& relation : schema.relation_classes) {
    if (!relation.attribute.prior_strength) {
      missing.push_back(relation.name + "." + relation.attribute.name);
    }
  }
  return missing;
}

void set_prior_strengths(Schema& schema, std::optional<double> entity_beta0,
                         std::optional<double> relation_beta0,
                         bool overwrite) {
  if (entity_beta0) {
    for (auto& entity : schema.entity_classes) {
      for (auto& attribute : entity.attributes) {
        if (overwrite || !attribute.prior_strength) {
          attribute.prior_strength = entity_beta0;
        }
      }
    }
  }
  if (relation_beta0) {
    for (auto& relation : schema.relation_classes) {
      if (overwrite || !relation.attribute.prior_strength) {
        relation.attribute.prior_strength = relation_beta0;
      }
    }
  }
}

std::string format_report(const ValidationReport& report) {
  std::string out;
  for (const auto& issue : report) {
    if (!out.empty()) out += "\n";
    out += issue.path + ": " + issue.message;
  }
  return out;
}

}  // namespace ihrm
