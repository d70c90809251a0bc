// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/gibbs.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ihrm/generative.hh"

namespace ihrm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool all_zero(std::span<const Count> counts) {
  return std::all_of(counts.begin(), counts.end(),
                     [](Count c) { return c == 0; });
}

double log_prob(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Sum of x_v log p_v, skipping zero counts.
double log_multinomial_kernel(std::span<const Count> counts,
                              std::span<const double> probabilities) {
  double out = 0.0;
  for (size_t v = 0; v < counts.size(); ++v) {
    if (counts[v] == 0) continue;
    out += static_cast<double>(counts[v]) * log_prob(probabilities[v]);
  }
  return out;
}

const EntityEvidence::LinkCounts* find_link(const EntityEvidence& evidence,
                                            int relation, Role role) {
  for (const auto& lc : evidence.links) {
    if (lc.link.relation == relation && lc.link.role == role) return &lc;
  }
  return nullptr;
}

EntityEvidence empty_evidence(const LatentState& state, const Model& model,
                              int entity_class) {
  EntityEvidence evidence;
  evidence.entity_class = entity_class;
  evidence.attributes.assign(model.attribute_count(entity_class), kMissing);
  for (const auto& link : model.links(entity_class)) {
    EntityEvidence::LinkCounts lc;
    lc.link = link;
    lc.cardinality = model.relation(link.relation).cardinality;
    lc.counts.assign(static_cast<size_t>(state.cluster_count(link.counterpart_class)) *
                         lc.cardinality,
                     0);
    evidence.links.push_back(std::move(lc));
  }
  return evidence;
}

void add_implied_absences(EntityEvidence::LinkCounts& lc,
                          const std::vector<Count>& listed,
                          const LatentState& state) {
  const auto& occupancy = state.classes[lc.link.counterpart_class].occupancy;
  for (size_t c = 0; c < listed.size(); ++c) {
    lc.counts[c * lc.cardinality] += occupancy[c] - listed[c];
  }
}

}  // namespace

EntityEvidence gather_evidence(const LatentState& state, const Model& model,
                               int entity_class, int entity) {
  const Dataset& data = model.dataset();
  EntityEvidence evidence = empty_evidence(state, model, entity_class);
  const auto row = data.entities(entity_class).row(entity);
  std::copy(row.begin(), row.end(), evidence.attributes.begin());
  for (auto& lc : evidence.links) {
    const auto& assignment = state.classes[lc.link.counterpart_class].assignment;
    std::vector<Count> listed(state.cluster_count(lc.link.counterpart_class), 0);
    for (const auto& item : data.incident(lc.link.relation, lc.link.role, entity)) {
      const int c = assignment[item.counterpart];
      ++listed[c];
      if (item.value != kMissing) {
        ++lc.counts[static_cast<size_t>(c) * lc.cardinality + item.value];
      }
    }
    if (model.relation(lc.link.relation).closed_world) {
      add_implied_absences(lc, listed, state);
    }
  }
  return evidence;
}

EntityEvidence external_evidence(const LatentState& state, const Model& model,
                                 int entity_class,
                                 std::span<const int> attributes,
                                 std::span<const ExternalObservation> relations,
                                 bool imply_absences) {
  EntityEvidence evidence = empty_evidence(state, model, entity_class);
  if (static_cast<int>(attributes.size()) != model.attribute_count(entity_class)) {
    throw std::invalid_argument("external_evidence: attribute count mismatch");
  }
  for (size_t a = 0; a < attributes.size(); ++a) {
    const int v = attributes[a];
    if (v != kMissing &&
        (v < 0 || v >= model.attribute_prior(entity_class, static_cast<int>(a))
                               .cardinality())) {
      throw std::invalid_argument("external_evidence: attribute value out of range");
    }
    evidence.attributes[a] = v;
  }
  std::vector<std::vector<Count>> listed(evidence.links.size());
  std::vector<std::vector<bool>> seen(evidence.links.size());
  for (size_t i = 0; i < evidence.links.size(); ++i) {
    const auto& link = evidence.links[i].link;
    listed[i].assign(state.cluster_count(link.counterpart_class), 0);
    seen[i].assign(model.dataset().entity_count(link.counterpart_class), false);
  }
  for (const auto& observation : relations) {
    if (observation.relation < 0 || observation.relation >= model.relation_count()) {
      throw std::invalid_argument("external_evidence: unknown relation");
    }
    const auto& g = model.relation(observation.relation);
    const Role role = g.symmetric ? Role::kSubject : observation.role;
    size_t index = evidence.links.size();
    for (size_t i = 0; i < evidence.links.size(); ++i) {
      if (evidence.links[i].link.relation == observation.relation &&
          evidence.links[i].link.role == role) {
        index = i;
      }
    }
    if (index == evidence.links.size()) {
      throw std::invalid_argument(
          "external_evidence: relation does not involve the entity's class "
          "in that role");
    }
    auto& lc = evidence.links[index];
    const auto& assignment = state.classes[lc.link.counterpart_class].assignment;
    if (observation.counterpart < 0 ||
        observation.counterpart >= static_cast<int>(assignment.size())) {
      throw std::invalid_argument("external_evidence: unknown counterpart " +
                                  std::to_string(observation.counterpart));
    }
    if (seen[index][observation.counterpart]) {
      throw std::invalid_argument("external_evidence: duplicate counterpart " +
                                  std::to_string(observation.counterpart));
    }
    seen[index][observation.counterpart] = true;
    if (observation.value != kMissing &&
        (observation.value < 0 || observation.value >= g.cardinality)) {
      throw std::invalid_argument("external_evidence: value out of range");
    }
    const int c = assignment[observation.counterpart];
    ++listed[index][c];
    if (observation.value != kMissing) {
      ++lc.counts[static_cast<size_t>(c) * lc.cardinality + observation.value];
    }
  }
  if (imply_absences) {
    for (size_t i = 0; i < evidence.links.size(); ++i) {
      if (model.relation(evidence.links[i].link.relation).closed_world) {
        add_implied_absences(evidence.links[i], listed[i], state);
      }
    }
  }
  return evidence;
}

double evidence_log_likelihood(const EntityEvidence& evidence,
                               const LatentState& state, const Model& model,
                               int cluster) {
  const int entity_class = evidence.entity_class;
  const auto& cls = state.classes[entity_class];
  if (cluster < 0 || cluster >= cls.cluster_count() ||
      cls.occupancy[cluster] < 1) {
    throw std::out_of_range("cluster " + std::to_string(cluster) +
                            " is not occupied");
  }
  const bool collapsed = state.mode == SamplerMode::kCollapsed;
  double out = 0.0;
  for (size_t a = 0; a < evidence.attributes.size(); ++a) {
    const int v = evidence.attributes[a];
    if (v == kMissing) continue;
    if (collapsed) {
      out += log_prob(posterior_predictive_prob(
          v, cls.attribute_counts[a].cell(cluster, 0),
          model.attribute_prior(entity_class, static_cast<int>(a))));
    } else {
      out += log_prob(cls.attribute_params[a].cell(cluster, 0)[v]);
    }
  }

  std::vector<Count> merged;
  std::vector<Count> base;
  for (const auto& lc : evidence.links) {
    const int relation = lc.link.relation;
    const auto& g = model.relation(relation);
    const auto& prior = model.relation_prior(relation);
    const bool self_directed = g.self_relation && !g.symmetric;
    const int counterparts = state.cluster_count(lc.link.counterpart_class);
    base.resize(lc.cardinality);
    for (int c = 0; c < counterparts; ++c) {
      std::span<const Count> added = lc.group(c);
      if (self_directed && c == cluster) {
        // Both roles land in the diagonal cell.
        if (lc.link.role == Role::kObject) continue;
        const auto* other = find_link(evidence, relation, Role::kObject);
        merged.assign(added.begin(), added.end());
        if (other) {
          auto extra = other->group(c);
          for (int v = 0; v < lc.cardinality; ++v) merged[v] += extra[v];
        }
        added = merged;
      }
      if (all_zero(added)) continue;
      const auto [row, col] = lc.link.role == Role::kSubject
                                  ? model.cell_of(relation, cluster, c)
                                  : model.cell_of(relation, c, cluster);
      if (collapsed) {
        model.effective_counts(state, relation, row, col, base);
        out += log_marginal_ratio(base, added, prior);
      } else {
        out += log_multinomial_kernel(
            added, state.relations[relation].params.cell(row, col));
      }
    }
  }
  return out;
}

double evidence_new_cluster_log_likelihood(const EntityEvidence& evidence,
                                           const Model& model) {
  double out = 0.0;
  for (size_t a = 0; a < evidence.attributes.size(); ++a) {
    const int v = evidence.attributes[a];
    if (v == kMissing) continue;
    out += log_prob(
        model.attribute_prior(evidence.entity_class, static_cast<int>(a)).base[v]);
  }
  for (const auto& lc : evidence.links) {
    const auto& prior = model.relation_prior(lc.link.relation);
    const int groups = static_cast<int>(lc.counts.size()) / lc.cardinality;
    for (int c = 0; c < groups; ++c) {
      out += dirichlet_multinomial_marginal(lc.group(c), prior);
    }
  }
  return out;
}

std::vector<double> evidence_log_weights(const EntityEvidence& evidence,
                                         const LatentState& state,
                                         const Model& model) {
  const auto& cls = state.classes[evidence.entity_class];
  std::vector<double> weights(cls.cluster_count() + 1);
  for (int k = 0; k < cls.cluster_count(); ++k) {
    weights[k] = cls.occupancy[k] > 0
                     ? std::log(static_cast<double>(cls.occupancy[k])) +
                           evidence_log_likelihood(evidence, state, model, k)
                     : kNegInf;
  }
  weights.back() = std::log(model.concentration(evidence.entity_class)) +
                   evidence_new_cluster_log_likelihood(evidence, model);
  return weights;
}

double entity_log_likelihood(const LatentState& state, const Model& model,
                             int entity_class, int entity, int cluster) {
  return evidence_log_likelihood(
      gather_evidence(state, model, entity_class, entity), state, model, cluster);
}

double new_cluster_log_likelihood(const LatentState& state, const Model& model,
                                  int entity_class, int entity) {
  return evidence_new_cluster_log_likelihood(
      gather_evidence(state, model, entity_class, entity), model);
}

std::vector<double> assignment_probabilities(const LatentState& state,
                                             const Model& model,
                                             int entity_class, int entity) {
  auto weights = evidence_log_weights(
      gather_evidence(state, model, entity_class, entity), state, model);
  normalize_log_weights(weights);
  return weights;
}

void gibbs_update_entity(LatentState& state, const Model& model,
                         int entity_class, int entity, Rng& rng) {
  const int previous = state.classes[entity_class].assignment[entity];
  remove_entity(state, model, entity_class, entity);
  if (state.classes[entity_class].occupancy[previous] == 0) {
    erase_cluster(state, model, entity_class, previous);
  }
  const auto evidence = gather_evidence(state, model, entity_class, entity);
  const auto weights = evidence_log_weights(evidence, state, model);
  const int choice = sample_log_categorical(weights, rng);
  if (choice == state.cluster_count(entity_class)) {
    const int cluster = append_cluster(state, model, entity_class);
    add_entity(state, model, entity_class, entity, cluster);
    if (state.mode == SamplerMode::kInstantiated) {
      draw_cluster_parameters(state, model, entity_class, cluster, rng);
    }
  } else {
    add_entity(state, model, entity_class, entity, choice);
  }
}

namespace {

void draw_relation_cell(LatentState& state, const Model& model, int relation,
                        int row, int col, Rng& rng) {
  const auto& prior = model.relation_prior(relation);
  std::vector<Count> counts(prior.cardinality());
  model.effective_counts(state, relation, row, col, counts);
  std::vector<double> alpha(prior.alpha);
  for (size_t v = 0; v < alpha.size(); ++v) alpha[v] += static_cast<double>(counts[v]);
  const auto draw = sample_dirichlet(alpha, rng);
  std::copy(draw.begin(), draw.end(),
            state.relations[relation].params.cell(row, col).begin());
}

void draw_attribute_row(LatentState& state, const Model& model,
                        int entity_class, int attribute, int cluster, Rng& rng) {
  auto& cls = state.classes[entity_class];
  const auto& prior = model.attribute_prior(entity_class, attribute);
  const auto counts = cls.attribute_counts[attribute].cell(cluster, 0);
  std::vector<double> alpha(prior.alpha);
  for (size_t v = 0; v < alpha.size(); ++v) alpha[v] += static_cast<double>(counts[v]);
  const auto draw = sample_dirichlet(alpha, rng);
  std::copy(draw.begin(), draw.end(),
            cls.attribute_params[attribute].cell(cluster, 0).begin());
}

}  // namespace

void draw_cluster_parameters(LatentState& state, const Model& model,
                             int entity_class, int cluster, Rng& rng) {
  if (state.mode != SamplerMode::kInstantiated) {
    throw std::logic_error("draw_cluster_parameters: collapsed state");
  }
  for (int a = 0; a < model.attribute_count(entity_class); ++a) {
    draw_attribute_row(state, model, entity_class, a, cluster, rng);
  }
  for (int r = 0; r < model.relation_count(); ++r) {
    const auto& g = model.relation(r);
    const auto& grid = state.relations[r].counts;
    if (g.symmetric) {
      if (g.subject_class != entity_class) continue;
      for (int c = 0; c < grid.cols(); ++c) {
        const auto [row, col] = model.cell_of(r, cluster, c);
        draw_relation_cell(state, model, r, row, col, rng);
      }
      continue;
    }
    if (g.subject_class == entity_class) {
      for (int col = 0; col < grid.cols(); ++col) {
        draw_relation_cell(state, model, r, cluster, col, rng);
      }
    }
    if (g.object_class == entity_class) {
      for (int row = 0; row < grid.rows(); ++row) {
        if (g.subject_class == entity_class && row == cluster) continue;
        draw_relation_cell(state, model, r, row, cluster, rng);
      }
    }
  }
}

void resample_parameters(LatentState& state, const Model& model, Rng& rng) {
  if (state.mode != SamplerMode::kInstantiated) {
    throw std::logic_error("resample_parameters requires instantiated mode");
  }
  for (int c = 0; c < model.class_count(); ++c) {
    for (int a = 0; a < model.attribute_count(c); ++a) {
      for (int k = 0; k < state.cluster_count(c); ++k) {
        draw_attribute_row(state, model, c, a, k, rng);
      }
    }
  }
  for (int r = 0; r < model.relation_count(); ++r) {
    const auto& grid = state.relations[r].counts;
    for (int row = 0; row < grid.rows(); ++row) {
      for (int col = 0; col < grid.cols(); ++col) {
        if (model.relation(r).symmetric && row > col) continue;
        draw_relation_cell(state, model, r, row, col, rng);
      }
    }
  }
}

void ChainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) {
    throw std::invalid_argument("burn_in must satisfy 0 <= burn_in < iterations");
  }
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (param_update_period < 1) {
    throw std::invalid_argument("param_update_period must be >= 1");
  }
}

LatentState initial_state(const Model& model, SamplerMode mode, Rng& rng) {
  std::vector<std::vector<int>> assignments;
  for (int c = 0; c < model.class_count(); ++c) {
    const int n = model.dataset().entity_count(c);
    assignments.push_back(n > 0 ? sample_crp_partition(n, model.concentration(c), rng)
                                : std::vector<int>{});
  }
  return build_state(model, std::move(assignments), mode);
}

PosteriorSamples run_gibbs(const Model& model, const ChainConfig& config,
                           const SweepObserver& observer) {
  config.validate();
  Rng rng(config.seed);
  LatentState state = initial_state(model, config.mode, rng);
  const bool instantiated = config.mode == SamplerMode::kInstantiated;
  if (instantiated) resample_parameters(state, model, rng);

  PosteriorSamples samples;
  samples.config = config;
  samples.snapshots.reserve(config.snapshot_count());
  samples.log_likelihood_trace.reserve(config.iterations);
  std::vector<std::vector<int>> order(model.class_count());
  for (int c = 0; c < model.class_count(); ++c) {
    order[c].resize(model.dataset().entity_count(c));
  }

  for (int sweep = 0; sweep < config.iterations; ++sweep) {
    for (int c = 0; c < model.class_count(); ++c) {
      std::iota(order[c].begin(), order[c].end(), 0);
      std::shuffle(order[c].begin(), order[c].end(), rng);
      for (int entity : order[c]) gibbs_update_entity(state, model, c, entity, rng);
    }
    if (instantiated && (sweep + 1) % config.param_update_period == 0) {
      resample_parameters(state, model, rng);
    }
    const double log_likelihood = joint_log_likelihood(state, model);
    if (!std::isfinite(log_likelihood)) {
      throw NumericalFault("joint log-likelihood is not finite at sweep " +
                               std::to_string(sweep),
                           state, sweep);
    }
    samples.log_likelihood_trace.push_back(log_likelihood);
    if (sweep >= config.burn_in && (sweep - config.burn_in + 1) % config.thin == 0) {
      samples.snapshots.push_back(state);
      samples.snapshot_sweeps.push_back(sweep);
    }
    if (observer) observer(sweep, state, log_likelihood);
  }
  return samples;
}

}  // namespace ihrm
