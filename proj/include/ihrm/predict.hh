// Apache License, Version 2.0, refer to LICENSE.txt

// Posterior predictions averaged uniformly over snapshots.

#pragma once

#include <span>
#include <variant>
#include <vector>

#include "ihrm/gibbs.hh"
#include "ihrm/state.hh"

namespace ihrm {

struct RelationQuery {
  int relation = 0;
  int subject = 0;
  int object = 0;

  bool operator==(const RelationQuery&) const = default;
};

struct AttributeQuery {
  int entity_class = 0;
  int entity = 0;
  int attribute = 0;

  bool operator==(const AttributeQuery&) const = default;
};

// An entity outside the training data, described by its observations.
struct NewEntity {
  int entity_class = 0;
  // One code (or kMissing) per attribute; empty means all missing.
  std::vector<int> attributes;
  std::vector<ExternalObservation> relations;
  // Closed-world counterparts not listed count as absences.
  bool imply_absences = false;
};

// Relation value between a new entity and a training counterpart.
struct FoldInRelationQuery {
  NewEntity entity;
  int relation = 0;
  Role role = Role::kSubject;
  int counterpart = 0;
};

struct FoldInAttributeQuery {
  NewEntity entity;
  int attribute = 0;
};

using Query = std::variant<RelationQuery, AttributeQuery, FoldInRelationQuery,
                           FoldInAttributeQuery>;

struct PredictionResult {
  Query query;
  std::vector<double> distribution;
  int samples_used = 0;
};

// Value distribution of a training pair. Collapsed snapshots use the
// posterior predictive of the pair's cell with the pair's own contribution
// (observed value or implied absence) removed. Throws std::out_of_range on
// unknown entities and std::invalid_argument on self-pairs of
// self-relations or empty samples.
PredictionResult predict_relation(std::span<const LatentState> samples,
                                  const Model& model, const RelationQuery& query);

// Attribute distribution of a training entity; collapsed snapshots exclude
// the entity's own observed value.
PredictionResult predict_attribute(std::span<const LatentState> samples,
                                   const Model& model, const AttributeQuery& query);

// Per snapshot, the normalized membership distribution of a new entity over
// the K existing clusters plus a new one. Snapshots are not modified.
std::vector<std::vector<double>> fold_in_entity(std::span<const LatentState> samples,
                                                const Model& model,
                                                const NewEntity& entity);

PredictionResult predict_fold_in_relation(std::span<const LatentState> samples,
                                          const Model& model,
                                          const FoldInRelationQuery& query);
PredictionResult predict_fold_in_attribute(std::span<const LatentState> samples,
                                           const Model& model,
                                           const FoldInAttributeQuery& query);

PredictionResult predict(std::span<const LatentState> samples, const Model& model,
                         const Query& query);

// Score used to rank pairs: P(value != 0) for closed-world relations,
// P(value == cardinality - 1) otherwise.
double relation_score(const PredictionResult& result, bool closed_world);

}  // namespace ihrm
