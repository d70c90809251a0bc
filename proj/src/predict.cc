// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/predict.hh"

#include <stdexcept>
#include <string>

namespace ihrm {

namespace {

void require_samples(std::span<const LatentState> samples) {
  if (samples.empty()) throw std::invalid_argument("no posterior samples");
}

void check_entity(const Model& model, int entity_class, int entity) {
  if (entity_class < 0 || entity_class >= model.class_count()) {
    throw std::out_of_range("unknown entity class " + std::to_string(entity_class));
  }
  if (entity < 0 || entity >= model.dataset().entity_count(entity_class)) {
    throw std::out_of_range("unknown entity " + std::to_string(entity) + " of class " +
                            model.schema().entity_classes[entity_class].name);
  }
}

void check_relation(const Model& model, int relation) {
  if (relation < 0 || relation >= model.relation_count()) {
    throw std::out_of_range("unknown relation " + std::to_string(relation));
  }
}

void check_attribute(const Model& model, int entity_class, int attribute) {
  if (attribute < 0 || attribute >= model.attribute_count(entity_class)) {
    throw std::out_of_range("unknown attribute " + std::to_string(attribute));
  }
}

void add_weighted(std::vector<double>& total, std::span<const double> p, double weight) {
  for (size_t v = 0; v < total.size(); ++v) total[v] += weight * p[v];
}

void scale(std::vector<double>& total, double factor) {
  for (double& x : total) x *= factor;
}

std::vector<double> cell_distribution(const LatentState& state, const Model& model,
                                      int relation, int row, int col,
                                      std::span<const Count> extra, int remove_value) {
  if (state.mode == SamplerMode::kInstantiated) {
    const auto params = state.relations[relation].params.cell(row, col);
    return {params.begin(), params.end()};
  }
  const auto& prior = model.relation_prior(relation);
  std::vector<Count> counts(prior.cardinality());
  model.effective_counts(state, relation, row, col, counts);
  for (size_t v = 0; v < extra.size(); ++v) counts[v] += extra[v];
  if (remove_value >= 0) --counts[remove_value];
  return posterior_predictive(counts, prior);
}

std::vector<double> attribute_distribution(const LatentState& state, const Model& model,
                                           int entity_class, int attribute, int cluster,
                                           int remove_value) {
  const auto& cls = state.classes[entity_class];
  if (state.mode == SamplerMode::kInstantiated) {
    const auto params = cls.attribute_params[attribute].cell(cluster, 0);
    return {params.begin(), params.end()};
  }
  const auto cell = cls.attribute_counts[attribute].cell(cluster, 0);
  std::vector<Count> counts(cell.begin(), cell.end());
  if (remove_value >= 0) --counts[remove_value];
  return posterior_predictive(counts, model.attribute_prior(entity_class, attribute));
}

EntityEvidence new_entity_evidence(const LatentState& state, const Model& model,
                                   const NewEntity& entity) {
  if (entity.entity_class < 0 || entity.entity_class >= model.class_count()) {
    throw std::out_of_range("unknown entity class " +
                            std::to_string(entity.entity_class));
  }
  std::vector<int> attributes = entity.attributes;
  if (attributes.empty()) attributes.assign(model.attribute_count(entity.entity_class), kMissing);
  return external_evidence(state, model, entity.entity_class, attributes,
                           entity.relations, entity.imply_absences);
}

const EntityEvidence::LinkCounts* find_link(const EntityEvidence& evidence,
                                            int relation, Role role) {
  for (const auto& lc : evidence.links) {
    if (lc.link.relation == relation && lc.link.role == role) return &lc;
  }
  return nullptr;
}

std::vector<double> membership(const EntityEvidence& evidence, const LatentState& state,
                               const Model& model) {
  auto weights = evidence_log_weights(evidence, state, model);
  normalize_log_weights(weights);
  return weights;
}

}  // namespace

PredictionResult predict_relation(std::span<const LatentState> samples,
                                  const Model& model, const RelationQuery& query) {
  require_samples(samples);
  check_relation(model, query.relation);
  const auto& g = model.relation(query.relation);
  check_entity(model, g.subject_class, query.subject);
  check_entity(model, g.object_class, query.object);
  if (g.self_relation && query.subject == query.object) {
    throw std::invalid_argument("self-pairs are not modeled");
  }
  const auto own = model.dataset().find_pair(query.relation, query.subject, query.object);
  int remove_value = -1;
  if (own && *own >= 0) remove_value = *own;
  if (!own && g.closed_world) remove_value = 0;

  PredictionResult result{query, std::vector<double>(g.cardinality, 0.0),
                          static_cast<int>(samples.size())};
  for (const auto& state : samples) {
    const int zs = state.classes[g.subject_class].assignment[query.subject];
    const int zo = state.classes[g.object_class].assignment[query.object];
    const auto [row, col] = model.cell_of(query.relation, zs, zo);
    add_weighted(result.distribution,
               cell_distribution(state, model, query.relation, row, col, {}, remove_value),
               1.0);
  }
  scale(result.distribution, 1.0 / static_cast<double>(samples.size()));
  return result;
}

PredictionResult predict_attribute(std::span<const LatentState> samples,
                                   const Model& model, const AttributeQuery& query) {
  require_samples(samples);
  check_entity(model, query.entity_class, query.entity);
  check_attribute(model, query.entity_class, query.attribute);
  const int own = model.dataset().entities(query.entity_class).get(query.entity,
                                                                   query.attribute);
  const int r = model.attribute_prior(query.entity_class, query.attribute).cardinality();
  PredictionResult result{query, std::vector<double>(r, 0.0),
                          static_cast<int>(samples.size())};
  for (const auto& state : samples) {
    const int k = state.classes[query.entity_class].assignment[query.entity];
    add_weighted(result.distribution,
               attribute_distribution(state, model, query.entity_class, query.attribute,
                                      k, own),
               1.0);
  }
  scale(result.distribution, 1.0 / static_cast<double>(samples.size()));
  return result;
}

std::vector<std::vector<double>> fold_in_entity(std::span<const LatentState> samples,
                                                const Model& model,
                                                const NewEntity& entity) {
  std::vector<std::vector<double>> out;
  out.reserve(samples.size());
  for (const auto& state : samples) {
    out.push_back(membership(new_entity_evidence(state, model, entity), state, model));
  }
  return out;
}

PredictionResult predict_fold_in_relation(std::span<const LatentState> samples,
                                          const Model& model,
                                          const FoldInRelationQuery& query) {
  require_samples(samples);
  check_relation(model, query.relation);
  const auto& g = model.relation(query.relation);
  const Role role = g.symmetric ? Role::kSubject : query.role;
  const int own_class = role == Role::kSubject ? g.subject_class : g.object_class;
  const int counterpart_class = role == Role::kSubject ? g.object_class : g.subject_class;
  if (own_class != query.entity.entity_class) {
    throw std::invalid_argument("relation does not take the entity's class in that role");
  }
  check_entity(model, counterpart_class, query.counterpart);

  // The queried pair is listed without a value so it is never an implied
  // absence.
  NewEntity entity = query.entity;
  entity.relations.push_back({query.relation, role, query.counterpart, kMissing});
  const auto& prior = model.relation_prior(query.relation);
  const bool self_directed = g.self_relation && !g.symmetric;

  PredictionResult result{query, std::vector<double>(g.cardinality, 0.0),
                          static_cast<int>(samples.size())};
  std::vector<Count> merged(g.cardinality);
  for (const auto& state : samples) {
    const auto evidence = new_entity_evidence(state, model, entity);
    const auto weights = membership(evidence, state, model);
    const auto* link = find_link(evidence, query.relation, role);
    const auto* other =
        self_directed ? find_link(evidence, query.relation,
                                  role == Role::kSubject ? Role::kObject : Role::kSubject)
                      : nullptr;
    const int c = state.classes[counterpart_class].assignment[query.counterpart];
    const int K = state.cluster_count(query.entity.entity_class);
    for (int k = 0; k < K; ++k) {
      if (weights[k] == 0.0) continue;
      const auto group = link->group(c);
      merged.assign(group.begin(), group.end());
      if (other && k == c) {
        const auto extra = other->group(c);
        for (int v = 0; v < g.cardinality; ++v) merged[v] += extra[v];
      }
      const auto [row, col] = role == Role::kSubject ? model.cell_of(query.relation, k, c)
                                                     : model.cell_of(query.relation, c, k);
      add_weighted(result.distribution,
                 cell_distribution(state, model, query.relation, row, col, merged, -1),
                 weights[k]);
    }
    add_weighted(result.distribution, posterior_predictive(link->group(c), prior),
               weights[K]);
  }
  scale(result.distribution, 1.0 / static_cast<double>(samples.size()));
  return result;
}

PredictionResult predict_fold_in_attribute(std::span<const LatentState> samples,
                                           const Model& model,
                                           const FoldInAttributeQuery& query) {
  require_samples(samples);
  const int cls = query.entity.entity_class;
  if (cls < 0 || cls >= model.class_count()) {
    throw std::out_of_range("unknown entity class " + std::to_string(cls));
  }
  check_attribute(model, cls, query.attribute);
  NewEntity entity = query.entity;
  if (entity.attributes.empty()) entity.attributes.assign(model.attribute_count(cls), kMissing);
  if (static_cast<int>(entity.attributes.size()) != model.attribute_count(cls)) {
    throw std::invalid_argument("attribute count mismatch");
  }
  entity.attributes[query.attribute] = kMissing;
  const auto& prior = model.attribute_prior(cls, query.attribute);

  PredictionResult result{query, std::vector<double>(prior.cardinality(), 0.0),
                          static_cast<int>(samples.size())};
  for (const auto& state : samples) {
    const auto weights = membership(new_entity_evidence(state, model, entity), state, model);
    const int K = state.cluster_count(cls);
    for (int k = 0; k < K; ++k) {
      if (weights[k] == 0.0) continue;
      add_weighted(result.distribution,
                 attribute_distribution(state, model, cls, query.attribute, k, -1),
                 weights[k]);
    }
    add_weighted(result.distribution, prior.base, weights[K]);
  }
  scale(result.distribution, 1.0 / static_cast<double>(samples.size()));
  return result;
}

PredictionResult predict(std::span<const LatentState> samples, const Model& model,
                         const Query& query) {
  return std::visit(
      [&](const auto& q) -> PredictionResult {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, RelationQuery>) {
          return predict_relation(samples, model, q);
        } else if constexpr (std::is_same_v<T, AttributeQuery>) {
          return predict_attribute(samples, model, q);
        } else if constexpr (std::is_same_v<T, FoldInRelationQuery>) {
          return predict_fold_in_relation(samples, model, q);
        } else {
          return predict_fold_in_attribute(samples, model, q);
        }
      },
      query);
}

double relation_score(const PredictionResult& result, bool closed_world) {
  if (closed_world) return 1.0 - result.distribution.front();
  return result.distribution.back();
}

}  // namespace ihrm
