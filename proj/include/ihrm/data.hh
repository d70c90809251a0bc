// Apache License, Version 2.0, refer to LICENSE.txt

// Observed data for a schema: per-entity attribute tables and per-relation
// observation lists, all integer coded. String tokens live in dictionaries
// outside the inference core.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ihrm/schema.hh"

namespace ihrm {

// Never a value code.
inline constexpr int kMissing = -1;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Triple {
  int subject = 0;
  int object = 0;
  int value = 0;

  auto operator<=>(const Triple&) const = default;
};

struct EntityPair {
  int subject = 0;
  int object = 0;

  auto operator<=>(const EntityPair&) const = default;
};

// entity × attribute grid of value codes or kMissing.
class AttributeTable {
 public:
  AttributeTable() = default;
  AttributeTable(int entity_count, int attribute_count);

  int entity_count() const { return entity_count_; }
  int attribute_count() const { return attribute_count_; }
  int get(int entity, int attribute) const {
    return values_[static_cast<size_t>(entity) * attribute_count_ + attribute];
  }
  void set(int entity, int attribute, int value) {
    values_[static_cast<size_t>(entity) * attribute_count_ + attribute] = value;
  }
  std::span<const int> row(int entity) const {
    return {values_.data() + static_cast<size_t>(entity) * attribute_count_,
            static_cast<size_t>(attribute_count_)};
  }

  bool operator==(const AttributeTable&) const = default;

 private:
  int entity_count_ = 0;
  int attribute_count_ = 0;
  std::vector<int> values_;
};

// Observations of one relation class. For closed-world relations the
// triples hold only non-absent values (code >= 1); `masked` lists pairs
// whose value is unknown (e.g. held out for testing) and which therefore
// are not implied absences. Open-world relations never use `masked`.
struct RelationObservations {
  std::vector<Triple> triples;
  std::vector<EntityPair> masked;

  bool operator==(const RelationObservations&) const = default;
};

enum class Role { kSubject, kObject };

// One observation seen from an entity. value == kMissing marks a masked
// pair.
struct Incidence {
  int counterpart = 0;
  int value = 0;
};

class Dataset {
 public:
  // Validates every invariant and canonicalizes symmetric pairs (subject <
  // object). Throws DataError on violations.
  Dataset(std::shared_ptr<const Schema> schema,
          std::vector<AttributeTable> entities,
          std::vector<RelationObservations> relations);

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }

  int entity_count(int entity_class) const {
    return entities_[entity_class].entity_count();
  }
  const AttributeTable& entities(int entity_class) const {
    return entities_[entity_class];
  }
  const RelationObservations& relation(int relation_class) const {
    return relations_[relation_class];
  }
  int subject_class(int relation_class) const {
    return endpoints_[relation_class].first;
  }
  int object_class(int relation_class) const {
    return endpoints_[relation_class].second;
  }

  // Observations touching `entity` in the given role. For symmetric
  // relations every neighbor is listed under kSubject and kObject is empty.
  std::span<const Incidence> incident(int relation_class, Role role,
                                      int entity) const;

  // Value of the pair, kMissing if masked, nullopt if unlisted. Symmetric
  // pairs may be given in either order.
  std::optional<int> find_pair(int relation_class, int subject,
                               int object) const;

  size_t observation_count() const;

  // Same observations under a different (compatible) schema, e.g. with
  // other prior strengths.
  Dataset with_schema(std::shared_ptr<const Schema> schema) const;

  bool operator==(const Dataset& other) const {
    return *schema_ == *other.schema_ && entities_ == other.entities_ &&
           relations_ == other.relations_;
  }

 private:
  struct Adjacency {
    std::vector<int> offsets;
    std::vector<Incidence> items;
  };

  void validate_and_index();

  std::shared_ptr<const Schema> schema_;
  std::vector<AttributeTable> entities_;
  std::vector<RelationObservations> relations_;
  std::vector<std::pair<int, int>> endpoints_;
  // [relation][role]
  std::vector<std::array<Adjacency, 2>> adjacency_;
};

// Token <-> code mapping for one attribute. Code i is tokens[i].
class ValueDictionary {
 public:
  ValueDictionary() = default;
  explicit ValueDictionary(std::vector<std::string> tokens);

  std::optional<int> code(const std::string& token) const;
  const std::string& token(int code) const { return tokens_.at(code); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int size() const { return static_cast<int>(tokens_.size()); }
  int add(const std::string& token);

  bool operator==(const ValueDictionary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> codes_;
};

// Builds a dictionary from the distinct tokens of one column: integers
// sort numerically, otherwise lexicographically. Closed-world relation
// dictionaries are seeded so that code 0 is the token "0".
ValueDictionary infer_dictionary(std::vector<std::string> tokens,
                                 bool seed_absent_zero);

struct EntityIds {
  std::vector<std::string> ids;
  std::unordered_map<std::string, int> index;

  std::optional<int> find(const std::string& id) const;
  int add(const std::string& id);
};

// Value dictionaries for every attribute of a schema; serializable to JSON
// so train and test files share one coding.
struct Dictionaries {
  // [entity class][attribute]
  std::vector<std::vector<ValueDictionary>> attributes;
  // [relation class]
  std::vector<ValueDictionary> relations;

  std::string to_json(const Schema& schema) const;
  static Dictionaries from_json(const std::string& text, const Schema& schema);
};

struct EntityTableLoad {
  AttributeTable table;
  EntityIds ids;
  std::vector<ValueDictionary> dictionaries;
};

// Header row required; the first column holds entity identifiers, the rest
// are attribute names in any order. Empty cells are missing. When
// `dictionaries` is non-null it must hold one dictionary per attribute and
// unknown tokens are an error; otherwise dictionaries are inferred.
EntityTableLoad load_entities_csv(
    const std::string& path, const Schema& schema, int entity_class,
    const std::vector<ValueDictionary>* dictionaries = nullptr);

struct RelationTableLoad {
  std::vector<Triple> triples;
  ValueDictionary dictionary;
};

// Columns: subject id, object id, value (header row required). Symmetric
// pairs are canonicalized before duplicate detection. Closed-world rows
// carrying the absent code are dropped since absence is implied.
RelationTableLoad load_relations_csv(const std::string& path,
                                     const Schema& schema, int relation_class,
                                     const EntityIds& subjects,
                                     const EntityIds& objects,
                                     const ValueDictionary* dictionary = nullptr);

struct LoadedData {
  std::shared_ptr<const Dataset> dataset;
  std::vector<EntityIds> ids;
  Dictionaries dictionaries;
};

// Reads <Class>.csv for every entity class and <Relation>.csv for every
// relation class from `directory`, plus dictionaries.json when present.
LoadedData load_dataset_dir(const std::string& directory,
                            std::shared_ptr<const Schema> schema);

// The file contents written for a dataset directory, keyed by file name.
std::map<std::string, std::string> format_dataset_files(
    const Dataset& dataset, const std::vector<EntityIds>& ids,
    const Dictionaries& dictionaries);

// Identity dictionaries ("0".."r-1") and ids "<Class>_<index>".
Dictionaries identity_dictionaries(const Schema& schema);
std::vector<EntityIds> default_entity_ids(const Dataset& dataset);

struct Rating {
  int subject = 0;
  int object = 0;
  double score = 0.0;
};

// Value 1 iff the score strictly exceeds the subject's mean score. When
// subject_count is given, every subject 0..subject_count-1 must have at
// least one rating.
std::vector<Triple> binarize_ratings(
    std::span<const Rating> ratings,
    std::optional<int> subject_count = std::nullopt);

struct SplitDataset {
  std::shared_ptr<const Dataset> train;
  // [relation class]; only the split relation is non-empty.
  std::vector<std::vector<Triple>> test;
};

// Holds out round(holdout_fraction * n) uniformly chosen triples of one
// relation. Closed-world held-out pairs become masked in train so they are
// not mistaken for absences.
SplitDataset train_test_split(const Dataset& dataset, int relation_class,
                              double holdout_fraction, std::uint64_t seed);

// Partitions the relation's triples into `folds` disjoint test sets.
std::vector<SplitDataset> k_fold_split(const Dataset& dataset,
                                       int relation_class, int folds,
                                       std::uint64_t seed);

}  // namespace ihrm
