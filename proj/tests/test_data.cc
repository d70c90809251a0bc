// Apache License, Version 2.0, refer to LICENSE.txt

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ihrm/csv.hh"
#include "ihrm/data.hh"
#include "test_util.hh"

using namespace ihrm;
using ihrm::testing::TempDir;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::shared_ptr<const Schema> one_attribute_schema() {
  return testing::schema_from(
      R"({"entity_classes":[{"name":"User","attributes":[{"name":"sex","cardinality":2,)"
      R"("prior_strength":1}]},{"name":"Movie"}],"relation_classes":[{"name":"Like",)"
      R"("subject":"User","object":"Movie","attribute":{"name":"r","cardinality":2,)"
      R"("prior_strength":1},"missing_policy":"open_world"}]})");
}

std::shared_ptr<const Schema> symmetric_schema() {
  return testing::schema_from(
      R"({"entity_classes":[{"name":"Gene"}],"relation_classes":[{"name":"Interact",)"
      R"("subject":"Gene","object":"Gene","attribute":{"name":"r","cardinality":2,)"
      R"("prior_strength":1},"missing_policy":"closed_world","symmetry":"symmetric"}]})");
}

template <typename F>
std::string data_error(F&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

std::set<Triple> as_set(const std::vector<Triple>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("csv reader handles quotes and line endings") {
  std::istringstream in("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\n\nlast,\n");
  const auto rows = csv::read(in);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "x,1");
  CHECK(rows[1][1] == "say \"hi\"");
  CHECK(rows[2] == csv::Row{"last", ""});
  CHECK(csv::format_row({"x,1", "p"}) == "\"x,1\",p\n");
  std::istringstream bad("\"open\n");
  CHECK_THROWS(csv::read(bad));
}

TEST_CASE("entity table with one empty cell") {
  TempDir dir("ent");
  write_file(dir / "User.csv", "id,sex\nu1,m\nu2,\nu3,f\n");
  const auto schema = one_attribute_schema();
  const auto load = load_entities_csv(dir / "User.csv", *schema, 0);
  CHECK(load.table.entity_count() == 3);
  CHECK(load.ids.ids == std::vector<std::string>{"u1", "u2", "u3"});
  CHECK(load.table.get(1, 0) == kMissing);
  CHECK(load.dictionaries[0].tokens() == std::vector<std::string>{"f", "m"});
  CHECK(load.table.get(0, 0) == 1);
  CHECK(load.table.get(2, 0) == 0);
}

TEST_CASE("943 users load as 943 entities") {
  TempDir dir("users");
  std::string text = "id,sex\n";
  for (int i = 1; i <= 943; ++i) text += std::to_string(i) + "," + (i % 2 ? "M" : "F") + "\n";
  write_file(dir / "User.csv", text);
  const auto schema = one_attribute_schema();
  CHECK(load_entities_csv(dir / "User.csv", *schema, 0).table.entity_count() == 943);
}

TEST_CASE("entity loader errors") {
  TempDir dir("enterr");
  const auto schema = one_attribute_schema();
  write_file(dir / "a.csv", "id,IQ\nu1,3\n");
  CHECK(data_error([&] { load_entities_csv(dir / "a.csv", *schema, 0); })
            .find("unknown column 'IQ'") != std::string::npos);
  write_file(dir / "b.csv", "id,sex\nu1,a\nu2,b\nu3,c\n");
  CHECK(data_error([&] { load_entities_csv(dir / "b.csv", *schema, 0); })
            .find("cardinality overflow") != std::string::npos);
  write_file(dir / "c.csv", "id,sex\nu1,x\n");
  const std::vector<ValueDictionary> dicts = {ValueDictionary({"f", "m"})};
  CHECK(data_error([&] { load_entities_csv(dir / "c.csv", *schema, 0, &dicts); })
            .find("not in dictionary") != std::string::npos);
}

TEST_CASE("entity row order permutes indices but keeps the id mapping") {
  TempDir dir("perm");
  const auto schema = one_attribute_schema();
  write_file(dir / "a.csv", "id,sex\nu1,m\nu2,\nu3,f\n");
  write_file(dir / "b.csv", "id,sex\nu3,f\nu1,m\nu2,\n");
  const std::vector<ValueDictionary> dicts = {ValueDictionary({"f", "m"})};
  const auto a = load_entities_csv(dir / "a.csv", *schema, 0, &dicts);
  const auto b = load_entities_csv(dir / "b.csv", *schema, 0, &dicts);
  for (const auto& id : a.ids.ids) {
    CHECK(a.table.get(*a.ids.find(id), 0) == b.table.get(*b.ids.find(id), 0));
  }
}

TEST_CASE("relation loader") {
  TempDir dir("rel");
  const auto schema = one_attribute_schema();
  EntityIds users, movies;
  users.add("u1");
  users.add("u2");
  movies.add("m1");

  write_file(dir / "empty.csv", "");
  CHECK(load_relations_csv(dir / "empty.csv", *schema, 0, users, movies).triples.empty());
  write_file(dir / "header.csv", "subject,object,value\n");
  CHECK(load_relations_csv(dir / "header.csv", *schema, 0, users, movies).triples.empty());

  write_file(dir / "ok.csv", "subject,object,value\nu1,m1,1\nu2,m1,0\n");
  const auto ok = load_relations_csv(dir / "ok.csv", *schema, 0, users, movies);
  CHECK(ok.triples == std::vector<Triple>{{0, 0, 1}, {1, 0, 0}});

  write_file(dir / "dup.csv", "subject,object,value\nu1,m1,1\nu1,m1,0\n");
  CHECK(data_error([&] { load_relations_csv(dir / "dup.csv", *schema, 0, users, movies); })
            .find("duplicate pair") != std::string::npos);

  write_file(dir / "unknown.csv", "subject,object,value\nu9,m1,1\n");
  CHECK(data_error([&] { load_relations_csv(dir / "unknown.csv", *schema, 0, users, movies); })
            .find("unknown entity id 'u9'") != std::string::npos);

  write_file(dir / "overflow.csv", "subject,object,value\nu1,m1,0\nu2,m1,2\n");
  const ValueDictionary wide({"0", "1", "2"});
  CHECK(data_error([&] {
          load_relations_csv(dir / "overflow.csv", *schema, 0, users, movies, &wide);
        }).find("overflow") != std::string::npos);
}

TEST_CASE("symmetric duplicates are found after canonical ordering") {
  TempDir dir("sym");
  const auto schema = symmetric_schema();
  EntityIds genes;
  genes.add("g1");
  genes.add("g2");
  write_file(dir / "i.csv", "a,b,r\ng2,g1,1\ng1,g2,1\n");
  CHECK(data_error([&] { load_relations_csv(dir / "i.csv", *schema, 0, genes, genes); })
            .find("duplicate pair") != std::string::npos);
  write_file(dir / "j.csv", "a,b,r\ng2,g1,1\n");
  const auto one = load_relations_csv(dir / "j.csv", *schema, 0, genes, genes);
  CHECK(one.triples == std::vector<Triple>{{0, 1, 1}});
}

TEST_CASE("closed-world absent rows are dropped") {
  TempDir dir("cw");
  const auto schema = symmetric_schema();
  EntityIds genes;
  for (auto id : {"g1", "g2", "g3"}) genes.add(id);
  write_file(dir / "i.csv", "a,b,r\ng1,g2,1\ng1,g3,0\n");
  const auto load = load_relations_csv(dir / "i.csv", *schema, 0, genes, genes);
  CHECK(load.triples == std::vector<Triple>{{0, 1, 1}});
  CHECK(load.dictionary.token(0) == "0");
}

TEST_CASE("dataset invariants") {
  const auto schema = symmetric_schema();
  auto make = [&](std::vector<Triple> triples, std::vector<EntityPair> masked = {}) {
    return Dataset(schema, {AttributeTable(3, 0)}, {RelationObservations{triples, masked}});
  };
  CHECK_NOTHROW(make({{0, 1, 1}}));
  CHECK_THROWS_AS(make({{0, 3, 1}}), DataError);
  CHECK_THROWS_AS(make({{0, 1, 2}}), DataError);
  CHECK_THROWS_AS(make({{1, 1, 1}}), DataError);
  CHECK_THROWS_AS(make({{0, 1, 1}, {1, 0, 1}}), DataError);
  CHECK_THROWS_AS(make({{0, 1, 1}}, {{1, 0}}), DataError);
  // Closed-world triples never carry the absent code.
  CHECK_THROWS_AS(make({{0, 1, 0}}), DataError);

  const Dataset d = make({{2, 0, 1}}, {{1, 2}});
  CHECK(d.relation(0).triples == std::vector<Triple>{{0, 2, 1}});
  CHECK(d.find_pair(0, 2, 0) == 1);
  CHECK(d.find_pair(0, 2, 1) == kMissing);
  CHECK_FALSE(d.find_pair(0, 0, 1).has_value());
  CHECK(d.incident(0, Role::kSubject, 2).size() == 2);
  CHECK(d.incident(0, Role::kObject, 2).empty());

  const auto open = one_attribute_schema();
  CHECK_THROWS_AS(Dataset(open, {AttributeTable(1, 1), AttributeTable(1, 0)},
                          {RelationObservations{{}, {{0, 0}}}}),
                  DataError);
}

TEST_CASE("dictionary inference") {
  CHECK(infer_dictionary({"10", "9", "2", "10"}, false).tokens() ==
        std::vector<std::string>{"2", "9", "10"});
  CHECK(infer_dictionary({"b", "a", "c"}, false).tokens() ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK(infer_dictionary({"1"}, true).tokens() == std::vector<std::string>{"0", "1"});
  const auto schema = testing::schema_from(testing::mixed_schema_json());
  Dictionaries d = identity_dictionaries(*schema);
  CHECK(Dictionaries::from_json(d.to_json(*schema), *schema).relations == d.relations);
}

TEST_CASE("binarize ratings") {
  const std::vector<Rating> a = {{0, 0, 5}, {0, 1, 3}, {0, 2, 4}};
  const auto ta = binarize_ratings(a);
  REQUIRE(ta.size() == 3);
  CHECK(ta[0].value == 1);
  CHECK(ta[1].value == 0);
  CHECK(ta[2].value == 0);

  const std::vector<Rating> b = {{0, 0, 4.5}};
  CHECK(binarize_ratings(b)[0].value == 0);

  const std::vector<Rating> c = {{0, 0, 1}, {0, 1, 5}};
  const auto tc = binarize_ratings(c);
  CHECK(tc[0].value == 0);
  CHECK(tc[1].value == 1);

  // Subject 1 has no rating.
  CHECK_THROWS_AS(binarize_ratings(c, 2), DataError);
}

TEST_CASE("train test split") {
  const auto schema = testing::schema_from(testing::movie_schema_json(1, 1, false));
  std::vector<Triple> triples;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) triples.push_back({i, j, (i + j) % 2});
  }
  const Dataset d(schema, {AttributeTable(10, 0), AttributeTable(10, 0)},
                  {RelationObservations{triples, {}}});
  const auto split = train_test_split(d, 0, 0.2, 7);
  CHECK(split.test[0].size() == 20);
  CHECK(split.train->relation(0).triples.size() == 80);

  const auto again = train_test_split(d, 0, 0.2, 7);
  CHECK(again.test == split.test);
  CHECK(*again.train == *split.train);

  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const auto s = train_test_split(d, 0, 0.35, seed);
    auto all = as_set(s.train->relation(0).triples);
    for (const auto& t : s.test[0]) CHECK(all.insert(t).second);
    CHECK(all == as_set(triples));
  }
  CHECK_THROWS_AS(train_test_split(d, 0, 0.0, 1), DataError);
  CHECK_THROWS_AS(train_test_split(d, 0, 1.0, 1), DataError);
}

TEST_CASE("closed-world split masks held-out pairs") {
  const auto schema = symmetric_schema();
  const Dataset d(schema, {AttributeTable(4, 0)},
                  {RelationObservations{{{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {0, 3, 1}}, {}}});
  const auto split = train_test_split(d, 0, 0.5, 3);
  REQUIRE(split.test[0].size() == 2);
  for (const auto& t : split.test[0]) {
    CHECK(split.train->find_pair(0, t.subject, t.object) == kMissing);
  }
}

TEST_CASE("k folds partition the triples") {
  const auto schema = testing::schema_from(testing::movie_schema_json(1, 1, false));
  std::vector<Triple> triples;
  for (int i = 0; i < 7; ++i) triples.push_back({i, i % 3, i % 2});
  const Dataset d(schema, {AttributeTable(7, 0), AttributeTable(3, 0)},
                  {RelationObservations{triples, {}}});
  const auto folds = k_fold_split(d, 0, 3, 5);
  REQUIRE(folds.size() == 3);
  std::set<Triple> seen;
  for (const auto& f : folds) {
    for (const auto& t : f.test[0]) CHECK(seen.insert(t).second);
    CHECK(f.train->relation(0).triples.size() + f.test[0].size() == triples.size());
  }
  CHECK(seen == as_set(triples));
  CHECK_THROWS_AS(k_fold_split(d, 0, 8, 5), DataError);
  CHECK_THROWS_AS(k_fold_split(d, 0, 1, 5), DataError);
}

TEST_CASE("dataset directory round trip") {
  TempDir dir("roundtrip");
  const auto schema = testing::schema_from(testing::mixed_schema_json());
  Rng rng(4);
  const auto d = testing::random_dataset(schema, {6, 3}, 0.4, rng);
  const auto files =
      format_dataset_files(*d, default_entity_ids(*d), identity_dictionaries(*schema));
  for (const auto& [name, text] : files) write_file(dir / name, text);
  const auto loaded = load_dataset_dir(dir.path.string(), schema);
  CHECK(*loaded.dataset == *d);
}
