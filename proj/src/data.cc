// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/data.hh"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ihrm/csv.hh"
#include "json.hpp"

namespace ihrm {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::optional<long long> parse_integer(const std::string& token) {
  long long value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || token.empty()) return std::nullopt;
  return value;
}

std::string pair_label(const std::string& a, const std::string& b) {
  return "(" + a + ", " + b + ")";
}

}  // namespace

AttributeTable::AttributeTable(int entity_count, int attribute_count)
    : entity_count_(entity_count),
      attribute_count_(attribute_count),
      values_(static_cast<size_t>(entity_count) * attribute_count, kMissing) {}

Dataset::Dataset(std::shared_ptr<const Schema> schema,
                 std::vector<AttributeTable> entities,
                 std::vector<RelationObservations> relations)
    : schema_(std::move(schema)),
      entities_(std::move(entities)),
      relations_(std::move(relations)) {
  validate_and_index();
}

void Dataset::validate_and_index() {
  const Schema& schema = *schema_;
  if (entities_.size() != schema.entity_classes.size()) {
    throw DataError("dataset has " + std::to_string(entities_.size()) +
                    " entity tables, schema declares " +
                    std::to_string(schema.entity_classes.size()));
  }
  for (size_t c = 0; c < entities_.size(); ++c) {
    const auto& spec = schema.entity_classes[c];
    const auto& table = entities_[c];
    if (table.attribute_count() != static_cast<int>(spec.attributes.size())) {
      throw DataError(spec.name + ": attribute count differs from schema");
    }
    for (int e = 0; e < table.entity_count(); ++e) {
      for (int a = 0; a < table.attribute_count(); ++a) {
        const int v = table.get(e, a);
        if (v != kMissing && (v < 0 || v >= spec.attributes[a].cardinality)) {
          throw DataError(spec.name + "." + spec.attributes[a].name +
                          ": value code " + std::to_string(v) +
                          " out of range for entity " + std::to_string(e));
        }
      }
    }
  }

  if (relations_.size() != schema.relation_classes.size()) {
    throw DataError("dataset has " + std::to_string(relations_.size()) +
                    " relation tables, schema declares " +
                    std::to_string(schema.relation_classes.size()));
  }
  endpoints_.clear();
  adjacency_.assign(relations_.size(), {});
  for (size_t r = 0; r < relations_.size(); ++r) {
    const auto& spec = schema.relation_classes[r];
    const int subject_class = schema.entity_class_index(spec.subject_class);
    const int object_class = schema.entity_class_index(spec.object_class);
    if (subject_class < 0 || object_class < 0) {
      throw DataError(spec.name + ": relation references unknown class");
    }
    endpoints_.emplace_back(subject_class, object_class);
    const int n_subjects = entities_[subject_class].entity_count();
    const int n_objects = entities_[object_class].entity_count();
    auto& observations = relations_[r];

    if (!spec.closed_world() && !observations.masked.empty()) {
      throw DataError(spec.name + ": masked pairs require closed_world");
    }
    auto check_pair = [&](int& s, int& o) {
      if (s < 0 || s >= n_subjects || o < 0 || o >= n_objects) {
        throw DataError(spec.name + ": entity index out of range in pair " +
                        pair_label(std::to_string(s), std::to_string(o)));
      }
      if (spec.self_relation() && s == o) {
        throw DataError(spec.name + ": self-pair for entity " +
                        std::to_string(s));
      }
      if (spec.symmetric() && s > o) std::swap(s, o);
    };
    for (auto& t : observations.triples) {
      check_pair(t.subject, t.object);
      if (t.value < 0 || t.value >= spec.attribute.cardinality) {
        throw DataError(spec.name + ": value code " + std::to_string(t.value) +
                        " out of range");
      }
      if (spec.closed_world() && t.value == 0) {
        throw DataError(spec.name +
                        ": closed_world relations store only non-absent "
                        "values (code 0 is implied)");
      }
    }
    for (auto& m : observations.masked) check_pair(m.subject, m.object);

    std::vector<EntityPair> pairs;
    pairs.reserve(observations.triples.size() + observations.masked.size());
    for (const auto& t : observations.triples) {
      pairs.push_back({t.subject, t.object});
    }
    pairs.insert(pairs.end(), observations.masked.begin(),
                 observations.masked.end());
    std::sort(pairs.begin(), pairs.end());
    auto dup = std::adjacent_find(pairs.begin(), pairs.end());
    if (dup != pairs.end()) {
      throw DataError(spec.name + ": duplicate pair " +
                      pair_label(std::to_string(dup->subject),
                                 std::to_string(dup->object)));
    }

    // Compressed incidence lists per role.
    auto build = [](Adjacency& adjacency, int n,
                    const std::vector<std::pair<int, Incidence>>& entries) {
      adjacency.offsets.assign(n + 1, 0);
      for (const auto& [owner, unused] : entries) ++adjacency.offsets[owner + 1];
      std::partial_sum(adjacency.offsets.begin(), adjacency.offsets.end(),
                       adjacency.offsets.begin());
      adjacency.items.resize(entries.size());
      std::vector<int> cursor(adjacency.offsets.begin(),
                              adjacency.offsets.end() - 1);
      for (const auto& [owner, item] : entries) {
        adjacency.items[cursor[owner]++] = item;
      }
    };
    std::vector<std::pair<int, Incidence>> by_subject;
    std::vector<std::pair<int, Incidence>> by_object;
    auto add = [&](int s, int o, int v) {
      if (spec.symmetric()) {
        by_subject.push_back({s, {o, v}});
        by_subject.push_back({o, {s, v}});
      } else {
        by_subject.push_back({s, {o, v}});
        by_object.push_back({o, {s, v}});
      }
    };
    for (const auto& t : observations.triples) add(t.subject, t.object, t.value);
    for (const auto& m : observations.masked) add(m.subject, m.object, kMissing);
    build(adjacency_[r][0], n_subjects, by_subject);
    build(adjacency_[r][1], n_objects, by_object);
  }
}

std::span<const Incidence> Dataset::incident(int relation_class, Role role,
                                             int entity) const {
  const auto& adjacency = adjacency_[relation_class][role == Role::kObject];
  const int begin = adjacency.offsets[entity];
  const int end = adjacency.offsets[entity + 1];
  return {adjacency.items.data() + begin, static_cast<size_t>(end - begin)};
}

std::optional<int> Dataset::find_pair(int relation_class, int subject,
                                      int object) const {
  const auto& spec = schema_->relation_classes[relation_class];
  if (spec.symmetric() && subject > object) std::swap(subject, object);
  for (const auto& item : incident(relation_class, Role::kSubject, subject)) {
    if (item.counterpart == object) return item.value;
  }
  return std::nullopt;
}

size_t Dataset::observation_count() const {
  size_t total = 0;
  for (const auto& table : entities_) {
    for (int e = 0; e < table.entity_count(); ++e) {
      for (int v : table.row(e)) total += (v != kMissing);
    }
  }
  for (const auto& relation : relations_) total += relation.triples.size();
  return total;
}

Dataset Dataset::with_schema(std::shared_ptr<const Schema> schema) const {
  const Schema& a = *schema_;
  const Schema& b = *schema;
  bool compatible = a.entity_classes.size() == b.entity_classes.size() &&
                    a.relation_classes.size() == b.relation_classes.size();
  for (size_t c = 0; compatible && c < a.entity_classes.size(); ++c) {
    const auto& x = a.entity_classes[c].attributes;
    const auto& y = b.entity_classes[c].attributes;
    compatible = x.size() == y.size();
    for (size_t i = 0; compatible && i < x.size(); ++i) {
      compatible = x[i].cardinality == y[i].cardinality;
    }
  }
  for (size_t r = 0; compatible && r < a.relation_classes.size(); ++r) {
    const auto& x = a.relation_classes[r];
    const auto& y = b.relation_classes[r];
    compatible = x.subject_class == y.subject_class &&
                 x.object_class == y.object_class &&
                 x.missing_policy == y.missing_policy &&
                 x.symmetry == y.symmetry &&
                 x.attribute.cardinality == y.attribute.cardinality;
  }
  if (!compatible) throw DataError("with_schema: incompatible schema");
  return Dataset(std::move(schema), entities_, relations_);
}

ValueDictionary::ValueDictionary(std::vector<std::string> tokens) {
  for (auto& token : tokens) {
    if (codes_.contains(token)) {
      throw DataError("dictionary: duplicate token '" + token + "'");
    }
    add(token);
  }
}

std::optional<int> ValueDictionary::code(const std::string& token) const {
  auto it = codes_.find(token);
  if (it == codes_.end()) return std::nullopt;
  return it->second;
}

int ValueDictionary::add(const std::string& token) {
  auto [it, inserted] = codes_.emplace(token, size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

ValueDictionary infer_dictionary(std::vector<std::string> tokens,
                                 bool seed_absent_zero) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  const bool numeric = std::all_of(tokens.begin(), tokens.end(),
                                   [](const std::string& t) {
                                     return parse_integer(t).has_value();
                                   });
  if (numeric) {
    std::stable_sort(tokens.begin(), tokens.end(),
                     [](const std::string& a, const std::string& b) {
                       return *parse_integer(a) < *parse_integer(b);
                     });
  }
  ValueDictionary dictionary;
  if (seed_absent_zero) dictionary.add("0");
  for (const auto& token : tokens) dictionary.add(token);
  return dictionary;
}

std::optional<int> EntityIds::find(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

int EntityIds::add(const std::string& id) {
  auto [it, inserted] = index.emplace(id, static_cast<int>(ids.size()));
  if (!inserted) throw DataError("duplicate entity id '" + id + "'");
  ids.push_back(id);
  return it->second;
}

std::string Dictionaries::to_json(const Schema& schema) const {
  nlohmann::json root = {{"attributes", nlohmann::json::object()},
                         {"relations", nlohmann::json::object()}};
  for (size_t c = 0; c < schema.entity_classes.size(); ++c) {
    nlohmann::json node = nlohmann::json::object();
    const auto& spec = schema.entity_classes[c];
    for (size_t a = 0; a < spec.attributes.size(); ++a) {
      node[spec.attributes[a].name] = attributes[c][a].tokens();
    }
    root["attributes"][spec.name] = node;
  }
  for (size_t r = 0; r < schema.relation_classes.size(); ++r) {
    root["relations"][schema.relation_classes[r].name] = relations[r].tokens();
  }
  return root.dump(2);
}

Dictionaries Dictionaries::from_json(const std::string& text,
                                     const Schema& schema) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("dictionaries: ") + e.what());
  }
  auto tokens_of = [](const nlohmann::json& node, const std::string& where) {
    if (!node.is_array()) throw DataError("dictionaries: " + where);
    std::vector<std::string> tokens;
    for (const auto& t : node) {
      if (!t.is_string()) throw DataError("dictionaries: " + where);
      tokens.push_back(t.get<std::string>());
    }
    return ValueDictionary(std::move(tokens));
  };
  Dictionaries out;
  for (const auto& spec : schema.entity_classes) {
    std::vector<ValueDictionary> per_class;
    for (const auto& attribute : spec.attributes) {
      const std::string where = spec.name + "." + attribute.name;
      const auto& node = root.value("attributes", nlohmann::json::object());
      if (!node.contains(spec.name) || !node[spec.name].contains(attribute.name)) {
        throw DataError("dictionaries: missing " + where);
      }
      per_class.push_back(tokens_of(node[spec.name][attribute.name], where));
      if (per_class.back().size() > attribute.cardinality) {
        throw DataError("dictionaries: " + where + " exceeds cardinality");
      }
    }
    out.attributes.push_back(std::move(per_class));
  }
  for (const auto& spec : schema.relation_classes) {
    const auto& node = root.value("relations", nlohmann::json::object());
    if (!node.contains(spec.name)) {
      throw DataError("dictionaries: missing " + spec.name);
    }
    out.relations.push_back(tokens_of(node[spec.name], spec.name));
    if (out.relations.back().size() > spec.attribute.cardinality) {
      throw DataError("dictionaries: " + spec.name + " exceeds cardinality");
    }
  }
  return out;
}

EntityTableLoad load_entities_csv(
    const std::string& path, const Schema& schema, int entity_class,
    const std::vector<ValueDictionary>* dictionaries) {
  const auto& spec = schema.entity_classes.at(entity_class);
  std::vector<csv::Row> rows;
  try {
    rows = csv::read_file(path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  if (rows.empty()) throw DataError(path + ": missing header row");
  const csv::Row& header = rows.front();

  // column -> attribute index
  std::vector<int> column_attribute(header.size(), -1);
  std::set<int> seen;
  for (size_t col = 1; col < header.size(); ++col) {
    const std::string name = trim(header[col]);
    const int a = spec.attribute_index(name);
    if (a < 0) {
      throw DataError(path + ": unknown column '" + name + "' for class " +
                      spec.name);
    }
    if (!seen.insert(a).second) {
      throw DataError(path + ": duplicate column '" + name + "'");
    }
    column_attribute[col] = a;
  }

  EntityTableLoad load;
  const int n_attributes = static_cast<int>(spec.attributes.size());
  std::vector<std::vector<std::string>> tokens(n_attributes);
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != header.size()) {
      throw DataError(path + ": row " + std::to_string(i + 1) + " has " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    load.ids.add(trim(row[0]));
    for (size_t col = 1; col < row.size(); ++col) {
      const std::string token = trim(row[col]);
      if (!token.empty()) tokens[column_attribute[col]].push_back(token);
    }
  }

  if (dictionaries) {
    if (static_cast<int>(dictionaries->size()) != n_attributes) {
      throw DataError(path + ": dictionary count differs from attributes");
    }
    load.dictionaries = *dictionaries;
  } else {
    for (int a = 0; a < n_attributes; ++a) {
      load.dictionaries.push_back(infer_dictionary(tokens[a], false));
      if (load.dictionaries[a].size() > spec.attributes[a].cardinality) {
        throw DataError(path + ": cardinality overflow for attribute '" +
                        spec.attributes[a].name + "' (" +
                        std::to_string(load.dictionaries[a].size()) +
                        " distinct values, cardinality " +
                        std::to_string(spec.attributes[a].cardinality) + ")");
      }
    }
  }

  load.table = AttributeTable(static_cast<int>(rows.size()) - 1, n_attributes);
  for (size_t i = 1; i < rows.size(); ++i) {
    for (size_t col = 1; col < header.size(); ++col) {
      const std::string token = trim(rows[i][col]);
      if (token.empty()) continue;
      const int a = column_attribute[col];
      auto code = load.dictionaries[a].code(token);
      if (!code) {
        throw DataError(path + ": value '" + token +
                        "' not in dictionary for attribute '" +
                        spec.attributes[a].name + "'");
      }
      if (*code >= spec.attributes[a].cardinality) {
        throw DataError(path + ": cardinality overflow for attribute '" +
                        spec.attributes[a].name + "'");
      }
      load.table.set(static_cast<int>(i) - 1, a, *code);
    }
  }
  return load;
}

RelationTableLoad load_relations_csv(const std::string& path,
                                     const Schema& schema, int relation_class,
                                     const EntityIds& subjects,
                                     const EntityIds& objects,
                                     const ValueDictionary* dictionary) {
  const auto& spec = schema.relation_classes.at(relation_class);
  std::vector<csv::Row> rows;
  try {
    rows = csv::read_file(path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  RelationTableLoad load;
  if (rows.empty()) {
    load.dictionary = dictionary ? *dictionary
                                 : infer_dictionary({}, spec.closed_world());
    return load;
  }
  if (rows.front().size() != 3) {
    throw DataError(path + ": expected header with 3 columns");
  }

  std::vector<std::string> tokens;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) {
      throw DataError(path + ": row " + std::to_string(i + 1) +
                      " does not have 3 fields");
    }
    tokens.push_back(trim(rows[i][2]));
  }
  if (dictionary) {
    load.dictionary = *dictionary;
  } else {
    load.dictionary = infer_dictionary(tokens, spec.closed_world());
    if (load.dictionary.size() > spec.attribute.cardinality) {
      throw DataError(path + ": cardinality overflow for relation '" +
                      spec.name + "'");
    }
  }

  std::set<std::pair<int, int>> seen;
  for (size_t i = 1; i < rows.size(); ++i) {
    const std::string subject_id = trim(rows[i][0]);
    const std::string object_id = trim(rows[i][1]);
    auto s = subjects.find(subject_id);
    if (!s) throw DataError(path + ": unknown entity id '" + subject_id + "'");
    auto o = objects.find(object_id);
    if (!o) throw DataError(path + ": unknown entity id '" + object_id + "'");
    auto code = load.dictionary.code(tokens[i - 1]);
    if (!code) {
      throw DataError(path + ": value '" + tokens[i - 1] +
                      "' not in dictionary for relation '" + spec.name + "'");
    }
    if (*code >= spec.attribute.cardinality) {
      throw DataError(path + ": value overflow for relation '" + spec.name +
                      "'");
    }
    int si = *s;
    int oi = *o;
    if (spec.self_relation() && si == oi) {
      throw DataError(path + ": self-pair for '" + subject_id + "'");
    }
    if (spec.symmetric() && si > oi) std::swap(si, oi);
    if (!seen.emplace(si, oi).second) {
      throw DataError(path + ": duplicate pair " +
                      pair_label(subject_id, object_id));
    }
    if (spec.closed_world() && *code == 0) continue;
    load.triples.push_back({si, oi, *code});
  }
  return load;
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<EntityPair> load_masked_csv(const std::string& path,
                                        const RelationClassSpec& spec,
                                        const EntityIds& subjects,
                                        const EntityIds& objects) {
  std::vector<csv::Row> rows;
  try {
    rows = csv::read_file(path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  std::vector<EntityPair> pairs;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) {
      throw DataError(path + ": row " + std::to_string(i + 1) +
                      " does not have 2 fields");
    }
    auto s = subjects.find(trim(rows[i][0]));
    auto o = objects.find(trim(rows[i][1]));
    if (!s || !o) throw DataError(path + ": unknown entity id");
    int si = *s;
    int oi = *o;
    if (spec.symmetric() && si > oi) std::swap(si, oi);
    pairs.push_back({si, oi});
  }
  return pairs;
}

}  // namespace

LoadedData load_dataset_dir(const std::string& directory,
                            std::shared_ptr<const Schema> schema) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  LoadedData loaded;
  std::optional<Dictionaries> presupplied;
  if (fs::exists(dir / "dictionaries.json")) {
    presupplied = Dictionaries::from_json(read_text(dir / "dictionaries.json"),
                                          *schema);
  }

  std::vector<AttributeTable> tables;
  for (size_t c = 0; c < schema->entity_classes.size(); ++c) {
    const auto path = dir / (schema->entity_classes[c].name + ".csv");
    auto load = load_entities_csv(path.string(), *schema, static_cast<int>(c),
                                  presupplied ? &presupplied->attributes[c]
                                              : nullptr);
    tables.push_back(std::move(load.table));
    loaded.ids.push_back(std::move(load.ids));
    loaded.dictionaries.attributes.push_back(std::move(load.dictionaries));
  }

  std::vector<RelationObservations> relations;
  for (size_t r = 0; r < schema->relation_classes.size(); ++r) {
    const auto& spec = schema->relation_classes[r];
    const int s = schema->entity_class_index(spec.subject_class);
    const int o = schema->entity_class_index(spec.object_class);
    const auto path = dir / (spec.name + ".csv");
    auto load = load_relations_csv(path.string(), *schema, static_cast<int>(r),
                                   loaded.ids[s], loaded.ids[o],
                                   presupplied ? &presupplied->relations[r]
                                               : nullptr);
    RelationObservations observations;
    observations.triples = std::move(load.triples);
    const auto masked_path = dir / (spec.name + ".masked.csv");
    if (fs::exists(masked_path)) {
      observations.masked = load_masked_csv(masked_path.string(), spec,
                                            loaded.ids[s], loaded.ids[o]);
    }
    relations.push_back(std::move(observations));
    loaded.dictionaries.relations.push_back(std::move(load.dictionary));
  }
  loaded.dataset = std::make_shared<const Dataset>(
      std::move(schema), std::move(tables), std::move(relations));
  return loaded;
}

std::map<std::string, std::string> format_dataset_files(
    const Dataset& dataset, const std::vector<EntityIds>& ids,
    const Dictionaries& dictionaries) {
  const Schema& schema = dataset.schema();
  std::map<std::string, std::string> files;
  for (size_t c = 0; c < schema.entity_classes.size(); ++c) {
    const auto& spec = schema.entity_classes[c];
    csv::Row header = {"id"};
    for (const auto& attribute : spec.attributes) header.push_back(attribute.name);
    std::string text = csv::format_row(header);
    const auto& table = dataset.entities(static_cast<int>(c));
    for (int e = 0; e < table.entity_count(); ++e) {
      csv::Row row = {ids[c].ids[e]};
      for (int a = 0; a < table.attribute_count(); ++a) {
        const int v = table.get(e, a);
        row.push_back(v == kMissing ? "" : dictionaries.attributes[c][a].token(v));
      }
      text += csv::format_row(row);
    }
    files[spec.name + ".csv"] = std::move(text);
  }
  for (size_t r = 0; r < schema.relation_classes.size(); ++r) {
    const auto& spec = schema.relation_classes[r];
    const auto& subjects = ids[dataset.subject_class(static_cast<int>(r))];
    const auto& objects = ids[dataset.object_class(static_cast<int>(r))];
    std::string text = csv::format_row({"subject", "object", "value"});
    const auto& observations = dataset.relation(static_cast<int>(r));
    for (const auto& t : observations.triples) {
      text += csv::format_row({subjects.ids[t.subject], objects.ids[t.object],
                               dictionaries.relations[r].token(t.value)});
    }
    files[spec.name + ".csv"] = std::move(text);
    if (!observations.masked.empty()) {
      std::string masked = csv::format_row({"subject", "object"});
      for (const auto& m : observations.masked) {
        masked += csv::format_row({subjects.ids[m.subject], objects.ids[m.object]});
      }
      files[spec.name + ".masked.csv"] = std::move(masked);
    }
  }
  files["dictionaries.json"] = dictionaries.to_json(schema) + "\n";
  return files;
}

Dictionaries identity_dictionaries(const Schema& schema) {
  auto identity = [](int cardinality) {
    std::vector<std::string> tokens;
    for (int v = 0; v < cardinality; ++v) tokens.push_back(std::to_string(v));
    return ValueDictionary(std::move(tokens));
  };
  Dictionaries out;
  for (const auto& spec : schema.entity_classes) {
    std::vector<ValueDictionary> per_class;
    for (const auto& attribute : spec.attributes) {
      per_class.push_back(identity(attribute.cardinality));
    }
    out.attributes.push_back(std::move(per_class));
  }
  for (const auto& spec : schema.relation_classes) {
    out.relations.push_back(identity(spec.attribute.cardinality));
  }
  return out;
}

std::vector<EntityIds> default_entity_ids(const Dataset& dataset) {
  std::vector<EntityIds> out;
  const Schema& schema = dataset.schema();
  for (size_t c = 0; c < schema.entity_classes.size(); ++c) {
    EntityIds ids;
    for (int e = 0; e < dataset.entity_count(static_cast<int>(c)); ++e) {
      ids.add(schema.entity_classes[c].name + "_" + std::to_string(e));
    }
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<Triple> binarize_ratings(std::span<const Rating> ratings,
                                     std::optional<int> subject_count) {
  std::map<int, std::pair<double, int>> totals;
  std::set<std::pair<int, int>> seen;
  for (const auto& rating : ratings) {
    if (!std::isfinite(rating.score)) {
      throw DataError("binarize_ratings: non-finite score for subject " +
                      std::to_string(rating.subject));
    }
    if (!seen.emplace(rating.subject, rating.object).second) {
      throw DataError("binarize_ratings: duplicate pair " +
                      pair_label(std::to_string(rating.subject),
                                 std::to_string(rating.object)));
    }
    auto& [sum, count] = totals[rating.subject];
    sum += rating.score;
    ++count;
  }
  if (subject_count) {
    for (int s = 0; s < *subject_count; ++s) {
      if (!totals.contains(s)) {
        throw DataError("binarize_ratings: subject " + std::to_string(s) +
                        " has no ratings");
      }
    }
  }
  std::vector<Triple> out;
  out.reserve(ratings.size());
  for (const auto& rating : ratings) {
    const auto& [sum, count] = totals[rating.subject];
    const double mean = sum / count;
    out.push_back({rating.subject, rating.object, rating.score > mean ? 1 : 0});
  }
  return out;
}

namespace {

SplitDataset make_split(const Dataset& dataset, int relation_class,
                        const std::vector<bool>& held_out) {
  const auto& spec = dataset.schema().relation_classes.at(relation_class);
  std::vector<AttributeTable> tables;
  for (size_t c = 0; c < dataset.schema().entity_classes.size(); ++c) {
    tables.push_back(dataset.entities(static_cast<int>(c)));
  }
  std::vector<RelationObservations> relations;
  for (size_t r = 0; r < dataset.schema().relation_classes.size(); ++r) {
    relations.push_back(dataset.relation(static_cast<int>(r)));
  }
  SplitDataset split;
  split.test.resize(relations.size());
  auto& train = relations[relation_class];
  const auto source = train.triples;
  train.triples.clear();
  for (size_t i = 0; i < source.size(); ++i) {
    if (held_out[i]) {
      split.test[relation_class].push_back(source[i]);
      if (spec.closed_world()) {
        train.masked.push_back({source[i].subject, source[i].object});
      }
    } else {
      train.triples.push_back(source[i]);
    }
  }
  split.train = std::make_shared<const Dataset>(
      dataset.schema_ptr(), std::move(tables), std::move(relations));
  return split;
}

}  // namespace

SplitDataset train_test_split(const Dataset& dataset, int relation_class,
                              double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw DataError("train_test_split: holdout_fraction must be in (0, 1)");
  }
  const size_t n = dataset.relation(relation_class).triples.size();
  const auto holdout =
      static_cast<size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> held_out(n, false);
  for (size_t i = 0; i < holdout; ++i) held_out[order[i]] = true;
  return make_split(dataset, relation_class, held_out);
}

std::vector<SplitDataset> k_fold_split(const Dataset& dataset,
                                       int relation_class, int folds,
                                       std::uint64_t seed) {
  const size_t n = dataset.relation(relation_class).triples.size();
  if (folds < 2 || static_cast<size_t>(folds) > n) {
    throw DataError("k_fold_split: infeasible fold count " +
                    std::to_string(folds) + " for " + std::to_string(n) +
                    " observations");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<SplitDataset> out;
  for (int f = 0; f < folds; ++f) {
    std::vector<bool> held_out(n, false);
    for (size_t i = 0; i < n; ++i) {
      if (static_cast<int>(i % folds) == f) held_out[order[i]] = true;
    }
    out.push_back(make_split(dataset, relation_class, held_out));
  }
  return out;
}

}  // namespace ihrm
