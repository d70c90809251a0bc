// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/state.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ihrm {

std::string_view to_string(SamplerMode mode) {
  return mode == SamplerMode::kInstantiated ? "instantiated" : "collapsed";
}

SamplerMode parse_sampler_mode(std::string_view text) {
  if (text == "collapsed") return SamplerMode::kCollapsed;
  if (text == "instantiated") return SamplerMode::kInstantiated;
  throw std::invalid_argument("unknown sampler mode '" + std::string(text) +
                              "'");
}

Model::Model(std::shared_ptr<const Dataset> dataset)
    : dataset_(std::move(dataset)) {
  const Schema& schema = dataset_->schema();
  const auto missing = missing_prior_strengths(schema);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw SchemaError("prior_strength unset for: " + list);
  }
  links_.resize(schema.entity_classes.size());
  for (const auto& spec : schema.entity_classes) {
    concentration_.push_back(spec.concentration);
    std::vector<DirichletPrior> priors;
    for (const auto& attribute : spec.attributes) {
      priors.push_back(DirichletPrior::from_attribute(attribute));
    }
    attribute_priors_.push_back(std::move(priors));
  }
  for (size_t r = 0; r < schema.relation_classes.size(); ++r) {
    const auto& spec = schema.relation_classes[r];
    RelationGeometry geometry;
    geometry.subject_class = dataset_->subject_class(static_cast<int>(r));
    geometry.object_class = dataset_->object_class(static_cast<int>(r));
    geometry.cardinality = spec.attribute.cardinality;
    geometry.closed_world = spec.closed_world();
    geometry.symmetric = spec.symmetric();
    geometry.self_relation = spec.self_relation();
    geometry_.push_back(geometry);
    relation_priors_.push_back(DirichletPrior::from_attribute(spec.attribute));
    const int rel = static_cast<int>(r);
    links_[geometry.subject_class].push_back(
        {rel, Role::kSubject, geometry.object_class});
    if (!geometry.symmetric) {
      links_[geometry.object_class].push_back(
          {rel, Role::kObject, geometry.subject_class});
    }
  }
}

std::pair<int, int> Model::cell_of(int relation, int subject_cluster,
                                   int object_cluster) const {
  if (geometry_[relation].symmetric && subject_cluster > object_cluster) {
    return {object_cluster, subject_cluster};
  }
  return {subject_cluster, object_cluster};
}

Count Model::candidate_pairs(const LatentState& state, int relation, int row,
                             int col) const {
  const auto& g = geometry_[relation];
  const Count rows = state.classes[g.subject_class].occupancy[row];
  const Count cols = state.classes[g.object_class].occupancy[col];
  if (!g.self_relation || row != col) return rows * cols;
  if (g.symmetric) return rows * (rows - 1) / 2;
  return rows * (rows - 1);
}

void Model::effective_counts(const LatentState& state, int relation, int row,
                             int col, std::span<Count> out) const {
  const auto& g = geometry_[relation];
  auto cell = state.relations[relation].counts.cell(row, col);
  Count listed = cell[g.cardinality];
  for (int v = 0; v < g.cardinality; ++v) {
    out[v] = cell[v];
    listed += cell[v];
  }
  if (g.closed_world) {
    out[0] += candidate_pairs(state, relation, row, col) - listed;
  }
}

namespace {

void set_to_prior_mean(Grid<double>& params, int row, int col,
                       const DirichletPrior& prior) {
  auto cell = params.cell(row, col);
  std::copy(prior.base.begin(), prior.base.end(), cell.begin());
}

void set_posterior_means(LatentState& state, const Model& model) {
  for (int c = 0; c < model.class_count(); ++c) {
    auto& cls = state.classes[c];
    for (int a = 0; a < model.attribute_count(c); ++a) {
      const auto& prior = model.attribute_prior(c, a);
      for (int k = 0; k < cls.cluster_count(); ++k) {
        auto mean = posterior_predictive(cls.attribute_counts[a].cell(k, 0), prior);
        std::copy(mean.begin(), mean.end(),
                  cls.attribute_params[a].cell(k, 0).begin());
      }
    }
  }
  for (int r = 0; r < model.relation_count(); ++r) {
    auto& rel = state.relations[r];
    const auto& prior = model.relation_prior(r);
    std::vector<Count> counts(prior.cardinality());
    for (int row = 0; row < rel.counts.rows(); ++row) {
      for (int col = 0; col < rel.counts.cols(); ++col) {
        if (model.relation(r).symmetric && row > col) {
          set_to_prior_mean(rel.params, row, col, prior);
          continue;
        }
        model.effective_counts(state, r, row, col, counts);
        auto mean = posterior_predictive(counts, prior);
        std::copy(mean.begin(), mean.end(), rel.params.cell(row, col).begin());
      }
    }
  }
}

void adjust_pair(LatentState& state, const Model& model, int relation,
                 int subject_cluster, int object_cluster, int value,
                 Count delta) {
  const auto [row, col] = model.cell_of(relation, subject_cluster, object_cluster);
  const int slot = value == kMissing ? model.relation(relation).cardinality : value;
  state.relations[relation].counts.cell(row, col)[slot] += delta;
}

void adjust_entity(LatentState& state, const Model& model, int entity_class,
                   int entity, int cluster, Count delta) {
  const Dataset& data = model.dataset();
  auto& cls = state.classes[entity_class];
  cls.occupancy[cluster] += delta;
  const auto values = data.entities(entity_class).row(entity);
  for (size_t a = 0; a < values.size(); ++a) {
    if (values[a] != kMissing) {
      cls.attribute_counts[a].cell(cluster, 0)[values[a]] += delta;
    }
  }
  for (const auto& link : model.links(entity_class)) {
    const auto& counterpart = state.classes[link.counterpart_class].assignment;
    for (const auto& item : data.incident(link.relation, link.role, entity)) {
      const int other = counterpart[item.counterpart];
      if (link.role == Role::kSubject) {
        adjust_pair(state, model, link.relation, cluster, other, item.value, delta);
      } else {
        adjust_pair(state, model, link.relation, other, cluster, item.value, delta);
      }
    }
  }
}

}  // namespace

LatentState build_state(const Model& model,
                        std::vector<std::vector<int>> assignments,
                        SamplerMode mode,
                        std::optional<std::vector<int>> cluster_counts) {
  const Dataset& data = model.dataset();
  if (static_cast<int>(assignments.size()) != model.class_count()) {
    throw std::invalid_argument("build_state: one assignment per class");
  }
  LatentState state;
  state.mode = mode;
  state.classes.resize(model.class_count());
  for (int c = 0; c < model.class_count(); ++c) {
    auto& cls = state.classes[c];
    cls.assignment = std::move(assignments[c]);
    if (static_cast<int>(cls.assignment.size()) != data.entity_count(c)) {
      throw std::invalid_argument("build_state: assignment length mismatch");
    }
    int clusters = 0;
    for (int z : cls.assignment) {
      if (z < 0) throw std::invalid_argument("build_state: negative label");
      clusters = std::max(clusters, z + 1);
    }
    if (cluster_counts) {
      if ((*cluster_counts)[c] < clusters) {
        throw std::invalid_argument("build_state: label exceeds cluster count");
      }
      clusters = (*cluster_counts)[c];
    }
    cls.occupancy.assign(clusters, 0);
    for (int z : cls.assignment) ++cls.occupancy[z];
    for (int a = 0; a < model.attribute_count(c); ++a) {
      const int r = model.attribute_prior(c, a).cardinality();
      cls.attribute_counts.emplace_back(clusters, 1, r);
      if (mode == SamplerMode::kInstantiated) {
        cls.attribute_params.emplace_back(clusters, 1, r);
      }
    }
    const auto& table = data.entities(c);
    for (int e = 0; e < table.entity_count(); ++e) {
      for (int a = 0; a < table.attribute_count(); ++a) {
        const int v = table.get(e, a);
        if (v != kMissing) ++cls.attribute_counts[a].cell(cls.assignment[e], 0)[v];
      }
    }
  }
  for (int r = 0; r < model.relation_count(); ++r) {
    const auto& g = model.relation(r);
    RelationState rel;
    const int rows = state.classes[g.subject_class].cluster_count();
    const int cols = state.classes[g.object_class].cluster_count();
    rel.counts = Grid<Count>(rows, cols, g.cardinality + 1);
    if (mode == SamplerMode::kInstantiated) {
      rel.params = Grid<double>(rows, cols, g.cardinality);
    }
    state.relations.push_back(std::move(rel));
    const auto& subjects = state.classes[g.subject_class].assignment;
    const auto& objects = state.classes[g.object_class].assignment;
    const auto& observations = data.relation(r);
    for (const auto& t : observations.triples) {
      adjust_pair(state, model, r, subjects[t.subject], objects[t.object],
                  t.value, 1);
    }
    for (const auto& m : observations.masked) {
      adjust_pair(state, model, r, subjects[m.subject], objects[m.object],
                  kMissing, 1);
    }
  }
  if (mode == SamplerMode::kInstantiated) set_posterior_means(state, model);
  return state;
}

std::vector<std::string> state_violations(const LatentState& state,
                                          const Model& model) {
  std::vector<std::string> issues;
  if (static_cast<int>(state.classes.size()) != model.class_count() ||
      static_cast<int>(state.relations.size()) != model.relation_count()) {
    issues.push_back("state shape differs from model");
    return issues;
  }
  std::vector<std::vector<int>> assignments;
  std::vector<int> cluster_counts;
  for (int c = 0; c < model.class_count(); ++c) {
    const auto& cls = state.classes[c];
    const std::string name = model.schema().entity_classes[c].name;
    Count total = 0;
    for (int k = 0; k < cls.cluster_count(); ++k) {
      if (cls.occupancy[k] < 1) {
        issues.push_back(name + ": cluster " + std::to_string(k) + " is empty");
      }
      total += cls.occupancy[k];
    }
    if (total != model.dataset().entity_count(c)) {
      issues.push_back(name + ": occupancies do not sum to entity count");
    }
    for (int z : cls.assignment) {
      if (z < 0 || z >= cls.cluster_count()) {
        issues.push_back(name + ": assignment out of range");
        return issues;
      }
    }
    assignments.push_back(cls.assignment);
    cluster_counts.push_back(cls.cluster_count());
  }
  const LatentState fresh =
      build_state(model, assignments, state.mode, cluster_counts);
  for (int c = 0; c < model.class_count(); ++c) {
    const std::string name = model.schema().entity_classes[c].name;
    if (fresh.classes[c].occupancy != state.classes[c].occupancy) {
      issues.push_back(name + ": occupancy differs from recount");
    }
    if (fresh.classes[c].attribute_counts != state.classes[c].attribute_counts) {
      issues.push_back(name + ": attribute counts differ from recount");
    }
  }
  for (int r = 0; r < model.relation_count(); ++r) {
    if (!(fresh.relations[r].counts == state.relations[r].counts)) {
      issues.push_back(model.schema().relation_classes[r].name +
                       ": relation counts differ from recount");
    }
  }
  if (state.mode == SamplerMode::kInstantiated) {
    auto check_vector = [&](std::span<const double> p, const std::string& where) {
      double total = 0.0;
      for (double x : p) {
        if (!(x >= 0.0)) {
          issues.push_back(where + ": negative or NaN probability");
          return;
        }
        total += x;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        issues.push_back(where + ": parameters do not sum to 1");
      }
    };
    for (int c = 0; c < model.class_count(); ++c) {
      const auto& cls = state.classes[c];
      for (size_t a = 0; a < cls.attribute_params.size(); ++a) {
        for (int k = 0; k < cls.cluster_count(); ++k) {
          check_vector(cls.attribute_params[a].cell(k, 0),
                       model.schema().entity_classes[c].name + " attribute " +
                           std::to_string(a));
        }
      }
    }
    for (int r = 0; r < model.relation_count(); ++r) {
      const auto& params = state.relations[r].params;
      for (int row = 0; row < params.rows(); ++row) {
        for (int col = 0; col < params.cols(); ++col) {
          check_vector(params.cell(row, col),
                       model.schema().relation_classes[r].name);
        }
      }
    }
  }
  return issues;
}

void remove_entity(LatentState& state, const Model& model, int entity_class,
                   int entity) {
  auto& z = state.classes[entity_class].assignment[entity];
  if (z < 0) throw std::logic_error("remove_entity: entity already removed");
  const int cluster = z;
  z = -1;
  adjust_entity(state, model, entity_class, entity, cluster, -1);
}

void add_entity(LatentState& state, const Model& model, int entity_class,
                int entity, int cluster) {
  auto& z = state.classes[entity_class].assignment[entity];
  if (z >= 0) throw std::logic_error("add_entity: entity already assigned");
  z = cluster;
  adjust_entity(state, model, entity_class, entity, cluster, 1);
}

int append_cluster(LatentState& state, const Model& model, int entity_class) {
  auto& cls = state.classes[entity_class];
  const int k = cls.cluster_count();
  cls.occupancy.push_back(0);
  for (int a = 0; a < model.attribute_count(entity_class); ++a) {
    cls.attribute_counts[a].append_row();
    if (state.mode == SamplerMode::kInstantiated) {
      cls.attribute_params[a].append_row();
      set_to_prior_mean(cls.attribute_params[a], k, 0,
                        model.attribute_prior(entity_class, a));
    }
  }
  for (int r = 0; r < model.relation_count(); ++r) {
    const auto& g = model.relation(r);
    auto& rel = state.relations[r];
    const bool instantiated = state.mode == SamplerMode::kInstantiated;
    if (g.subject_class == entity_class) {
      rel.counts.append_row();
      if (instantiated) {
        rel.params.append_row();
        for (int col = 0; col < rel.params.cols(); ++col) {
          set_to_prior_mean(rel.params, k, col, model.relation_prior(r));
        }
      }
    }
    if (g.object_class == entity_class) {
      rel.counts.append_col();
      if (instantiated) {
        rel.params.append_col();
        for (int row = 0; row < rel.params.rows(); ++row) {
          set_to_prior_mean(rel.params, row, k, model.relation_prior(r));
        }
      }
    }
  }
  return k;
}

void erase_cluster(LatentState& state, const Model& model, int entity_class,
                   int cluster) {
  auto& cls = state.classes[entity_class];
  cls.occupancy.erase(cls.occupancy.begin() + cluster);
  for (auto& grid : cls.attribute_counts) grid.erase_row(cluster);
  for (auto& grid : cls.attribute_params) grid.erase_row(cluster);
  for (int& z : cls.assignment) {
    if (z > cluster) --z;
  }
  const bool instantiated = state.mode == SamplerMode::kInstantiated;
  for (int r = 0; r < model.relation_count(); ++r) {
    const auto& g = model.relation(r);
    auto& rel = state.relations[r];
    if (g.subject_class == entity_class) {
      rel.counts.erase_row(cluster);
      if (instantiated) rel.params.erase_row(cluster);
    }
    if (g.object_class == entity_class) {
      rel.counts.erase_col(cluster);
      if (instantiated) rel.params.erase_col(cluster);
    }
  }
}

void remove_empty_clusters(LatentState& state, const Model& model) {
  for (int c = 0; c < model.class_count(); ++c) {
    for (int k = state.classes[c].cluster_count() - 1; k >= 0; --k) {
      if (state.classes[c].occupancy[k] == 0) erase_cluster(state, model, c, k);
    }
  }
}

double joint_log_likelihood(const LatentState& state, const Model& model) {
  double total = 0.0;
  for (int c = 0; c < model.class_count(); ++c) {
    const auto& cls = state.classes[c];
    const double alpha = model.concentration(c);
    Count n = 0;
    for (int k = 0; k < cls.cluster_count(); ++k) {
      const Count occupancy = cls.occupancy[k];
      if (occupancy == 0) continue;
      n += occupancy;
      total += std::log(alpha) + std::lgamma(static_cast<double>(occupancy));
    }
    total -= log_rising(alpha, n);
    for (int a = 0; a < model.attribute_count(c); ++a) {
      for (int k = 0; k < cls.cluster_count(); ++k) {
        total += dirichlet_multinomial_marginal(cls.attribute_counts[a].cell(k, 0),
                                                model.attribute_prior(c, a));
      }
    }
  }
  for (int r = 0; r < model.relation_count(); ++r) {
    const auto& grid = state.relations[r].counts;
    const auto& prior = model.relation_prior(r);
    std::vector<Count> counts(prior.cardinality());
    for (int row = 0; row < grid.rows(); ++row) {
      for (int col = 0; col < grid.cols(); ++col) {
        if (model.relation(r).symmetric && row > col) continue;
        model.effective_counts(state, r, row, col, counts);
        total += dirichlet_multinomial_marginal(counts, prior);
      }
    }
  }
  return total;
}

std::vector<int> canonical_labels(std::span<const int> assignment) {
  std::vector<int> relabel;
  std::vector<int> out;
  out.reserve(assignment.size());
  for (int z : assignment) {
    if (z >= static_cast<int>(relabel.size())) relabel.resize(z + 1, -1);
    if (relabel[z] < 0) {
      relabel[z] = static_cast<int>(std::count_if(
          relabel.begin(), relabel.end(), [](int x) { return x >= 0; }));
    }
    out.push_back(relabel[z]);
  }
  return out;
}

}  // namespace ihrm
