// Apache License, Version 2.0, refer to LICENSE.txt

#include <string>

#include "doctest.h"
#include "ihrm/schema.hh"
#include "test_util.hh"

using namespace ihrm;

namespace {

std::string gene_schema() {
  std::string classes;
  std::string relations;
  const std::vector<std::string> others = {"Complex", "Phenotype", "Class", "Motif",
                                           "Function"};
  const std::vector<std::string> links = {"Form", "Observe", "Belong", "Contain", "Have"};
  classes =
      R"({"name":"Gene","attributes":[{"name":"essential","cardinality":2,"prior_strength":1},)"
      R"({"name":"chromosome","cardinality":17,"prior_strength":1}]})";
  for (const auto& name : others) {
    classes += R"(,{"name":")" + name + R"(","attributes":[]})";
  }
  relations =
      R"({"name":"Interact","subject":"Gene","object":"Gene","attribute":{"name":"r",)"
      R"("cardinality":2,"prior_strength":1},"missing_policy":"closed_world","symmetry":"symmetric"})";
  for (size_t i = 0; i < others.size(); ++i) {
    relations += R"(,{"name":")" + links[i] + R"(","subject":"Gene","object":")" + others[i] +
                 R"(","attribute":{"name":"r","cardinality":2,"prior_strength":1},)"
                 R"("missing_policy":"closed_world"})";
  }
  return R"({"entity_classes":[)" + classes + R"(],"relation_classes":[)" + relations + "]}";
}

std::string error_of(const std::string& text) {
  try {
    parse_schema(text);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const Schema s = parse_schema(
      R"({"entity_classes":[{"name":"Thing","attributes":[{"name":"a","cardinality":2}]}]})");
  REQUIRE(s.entity_classes.size() == 1);
  CHECK(s.relation_classes.empty());
  CHECK(s.entity_classes[0].concentration == 10.0);
  const auto& a = s.entity_classes[0].attributes[0];
  CHECK_FALSE(a.prior_strength.has_value());
  CHECK(a.prior_base == std::vector<double>{0.5, 0.5});
  CHECK(missing_prior_strengths(s) == std::vector<std::string>{"Thing.a"});
}

TEST_CASE("movie config has user, movie and like") {
  const Schema s = parse_schema(testing::movie_schema_json(10, 1, true));
  REQUIRE(s.entity_classes.size() == 2);
  REQUIRE(s.relation_classes.size() == 1);
  CHECK(s.entity_class_index("User") == 0);
  CHECK(s.entity_class_index("Movie") == 1);
  const auto& like = s.relation_classes[0];
  CHECK(like.name == "Like");
  CHECK(like.subject_class == "User");
  CHECK(like.object_class == "Movie");
  CHECK(like.missing_policy == MissingPolicy::kOpenWorld);
  CHECK(like.symmetry == Symmetry::kDirected);
  CHECK(like.attribute.cardinality == 2);
}

TEST_CASE("undeclared class is named") {
  const std::string text =
      R"({"entity_classes":[{"name":"User"},{"name":"Movie"}],"relation_classes":[)"
      R"({"name":"Like","subject":"Userz","object":"Movie","attribute":{"name":"r",)"
      R"("cardinality":2},"missing_policy":"open_world"}]})";
  const std::string message = error_of(text);
  CHECK(message.find("Userz") != std::string::npos);
  CHECK(message.find("undeclared entity class") != std::string::npos);
}

TEST_CASE("syntax error reports position") {
  const std::string message = error_of("{\n  \"entity_classes\": [,]\n}");
  CHECK(message.find("syntax error") != std::string::npos);
  CHECK(message.find("line 2") != std::string::npos);
  CHECK(message.find("column") != std::string::npos);
}

TEST_CASE("unknown keys and duplicates are rejected") {
  CHECK(error_of(R"({"entity_classes":[{"name":"A","colour":1}]})").find("unknown key 'colour'") !=
        std::string::npos);
  CHECK(error_of(R"({"entity_classes":[{"name":"A"},{"name":"A"}]})")
            .find("duplicate class name 'A'") != std::string::npos);
  CHECK(error_of(R"({"entity_classes":[{"name":"A","attributes":[{"name":"x","cardinality":2},)"
                 R"({"name":"x","cardinality":3}]}]})")
            .find("duplicate attribute name") != std::string::npos);
  CHECK(error_of(R"({"entity_classes":[{"name":"A","attributes":[{"name":"x","cardinality":1}]}]})")
            .find("cardinality must be at least 2") != std::string::npos);
  CHECK(error_of(R"({"entity_classes":[{"name":"A","concentration":0}]})")
            .find("concentration must be positive") != std::string::npos);
  CHECK(error_of(R"({"entity_classes":[{"name":"A","attributes":[{"name":"x","cardinality":2,)"
                 R"("prior_strength":-1}]}]})")
            .find("prior_strength must be positive") != std::string::npos);
}

TEST_CASE("validate_schema reports prior_base and symmetry issues") {
  Schema s = parse_schema(testing::movie_schema_json(10, 1, true));
  s.entity_classes[0].attributes[0].prior_base = {0.3, 0.3, 0.3};
  auto report = validate_schema(s);
  REQUIRE(report.size() == 1);
  CHECK(report[0].message.find("prior_base sums to") != std::string::npos);
  CHECK(report[0].path.find("entity_classes[0].attributes[0]") != std::string::npos);

  s = parse_schema(testing::movie_schema_json(10, 1, false));
  s.relation_classes[0].symmetry = Symmetry::kSymmetric;
  report = validate_schema(s);
  REQUIRE(report.size() == 1);
  CHECK(report[0].message == "symmetry requires self-relation");

  s = parse_schema(testing::movie_schema_json(10, 1, true));
  s.entity_classes[1].attributes[0].prior_base = {0.5, 0.5};
  report = validate_schema(s);
  REQUIRE(report.size() == 1);
  CHECK(report[0].message.find("prior_base length differs") != std::string::npos);
}

TEST_CASE("gene schema with six classes and six relations is valid") {
  const Schema s = parse_schema(gene_schema());
  CHECK(s.entity_classes.size() == 6);
  CHECK(s.relation_classes.size() == 6);
  CHECK(validate_schema(s).empty());
  CHECK(s.relation_classes[0].symmetric());
}

TEST_CASE("parse and serialize round trip") {
  for (const std::string& text :
       {testing::movie_schema_json(3.5, 0.25, true, true), testing::mixed_schema_json(),
        gene_schema(),
        std::string(R"({"entity_classes":[{"name":"A","attributes":[{"name":"x","cardinality":4,)"
                    R"("prior_base":[0.1,0.2,0.3,0.4]}]}]})")}) {
    const Schema s = parse_schema(text);
    const std::string once = serialize_schema(s);
    const Schema again = parse_schema(once);
    CHECK(again == s);
    CHECK(serialize_schema(again) == once);
  }
}

TEST_CASE("validate_schema is pure") {
  Schema s = parse_schema(testing::mixed_schema_json());
  s.entity_classes[0].attributes[0].prior_base = {0.5, 0.5, 0.5};
  s.relation_classes[2].symmetry = Symmetry::kSymmetric;
  const Schema copy = s;
  const auto a = format_report(validate_schema(s));
  const auto b = format_report(validate_schema(s));
  CHECK(a == b);
  CHECK(s == copy);
  CHECK_FALSE(a.empty());
}

TEST_CASE("set_prior_strengths fills only unset values unless overwriting") {
  Schema s = parse_schema(
      R"({"entity_classes":[{"name":"A","attributes":[{"name":"x","cardinality":2},)"
      R"({"name":"y","cardinality":2,"prior_strength":3}]}],"relation_classes":[{"name":"R",)"
      R"("subject":"A","object":"A","attribute":{"name":"r","cardinality":2},)"
      R"("missing_policy":"open_world"}]})");
  CHECK(missing_prior_strengths(s) == std::vector<std::string>{"A.x", "R.r"});
  set_prior_strengths(s, 2.0, 5.0, false);
  CHECK(*s.entity_classes[0].attributes[0].prior_strength == 2.0);
  CHECK(*s.entity_classes[0].attributes[1].prior_strength == 3.0);
  CHECK(*s.relation_classes[0].attribute.prior_strength == 5.0);
  set_prior_strengths(s, 7.0, std::nullopt, true);
  CHECK(*s.entity_classes[0].attributes[1].prior_strength == 7.0);
  CHECK(*s.relation_classes[0].attribute.prior_strength == 5.0);
  CHECK(missing_prior_strengths(s).empty());
}
