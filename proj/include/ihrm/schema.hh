// Apache License, Version 2.0, refer to LICENSE.txt

// Relational schema: entity classes with discrete attributes, relation
// classes between them, and the Dirichlet / Dirichlet-process
// hyperparameters attached to each.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ihrm {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MissingPolicy { kOpenWorld, kClosedWorld };
enum class Symmetry { kDirected, kSymmetric };

inline constexpr double kDefaultConcentration = 10.0;

// A discrete attribute with values 0..cardinality-1 and a Dirichlet prior
// Dir(prior_strength * prior_base).
struct AttributeSpec {
  std::string name;
  int cardinality = 2;
  // Left unset when the config omits it; must be supplied (or tuned)
  // before a model can be built.
  std::optional<double> prior_strength;
  std::vector<double> prior_base;

  // prior_strength, throwing SchemaError when unset.
  double strength() const;

  bool operator==(const AttributeSpec&) const = default;
};

struct EntityClassSpec {
  std::string name;
  std::vector<AttributeSpec> attributes;
  double concentration = kDefaultConcentration;

  // -1 when absent.
  int attribute_index(std::string_view attribute) const;

  bool operator==(const EntityClassSpec&) const = default;
};

// Under kClosedWorld, value code 0 of the relation attribute means "absent"
// and every unlisted (subject, object) pair is an implied absence.
struct RelationClassSpec {
  std::string name;
  std::string subject_class;
  std::string object_class;
  AttributeSpec attribute;
  MissingPolicy missing_policy = MissingPolicy::kOpenWorld;
  Symmetry symmetry = Symmetry::kDirected;

  bool closed_world() const {
    return missing_policy == MissingPolicy::kClosedWorld;
  }
  bool symmetric() const { return symmetry == Symmetry::kSymmetric; }
  bool self_relation() const { return subject_class == object_class; }

  bool operator==(const RelationClassSpec&) const = default;
};

struct Schema {
  std::vector<EntityClassSpec> entity_classes;
  std::vector<RelationClassSpec> relation_classes;

  // -1 when absent.
  int entity_class_index(std::string_view name) const;
  int relation_class_index(std::string_view name) const;

  bool operator==(const Schema&) const = default;
};

struct ValidationIssue {
  std::string path;
  std::string message;
};
using ValidationReport = std::vector<ValidationIssue>;

// Parses the JSON schema config, fills defaults (concentration 10, uniform
// prior_base, directed symmetry) and validates. Throws SchemaError on
// syntax errors (with line and column), unknown or malformed keys, and any
// validation issue.
Schema parse_schema(std::string_view text);

// Inverse of parse_schema. Every field is written explicitly.
std::string serialize_schema(const Schema& schema);

// Lists every violated invariant. Empty iff the schema is valid. Unset
// prior strengths are not an issue here; see missing_prior_strengths.
ValidationReport validate_schema(const Schema& schema);

// Paths of attributes (entity and relation) whose prior_strength is unset.
std::vector<std::string> missing_prior_strengths(const Schema& schema);

// Sets prior strengths per role group. Only unset values are touched unless
// overwrite is true.
void set_prior_strengths(Schema& schema, std::optional<double> entity_beta0,
                         std::optional<double> relation_beta0,
                         bool overwrite);

std::string format_report(const ValidationReport& report);

std::string_view to_string(MissingPolicy policy);
std::string_view to_string(Symmetry symmetry);

}  // namespace ihrm
