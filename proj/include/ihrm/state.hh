// Apache License, Version 2.0, refer to LICENSE.txt

// Latent cluster state of the infinite hidden relational model and the
// read-only model context (priors, relation geometry) it is scored against.

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihrm/conjugate.hh"
#include "ihrm/data.hh"
#include "ihrm/grid.hh"

namespace ihrm {

enum class SamplerMode { kCollapsed, kInstantiated };

std::string_view to_string(SamplerMode mode);
SamplerMode parse_sampler_mode(std::string_view text);

struct ClassState {
  std::vector<int> assignment;
  std::vector<Count> occupancy;
  // Per attribute: rows = clusters, one cell of `cardinality` value counts.
  std::vector<Grid<Count>> attribute_counts;
  // Per attribute: rows = clusters, one probability vector. Instantiated
  // mode only.
  std::vector<Grid<double>> attribute_params;

  int cluster_count() const { return static_cast<int>(occupancy.size()); }

  bool operator==(const ClassState&) const = default;
};

struct RelationState {
  // subject clusters × object clusters; each cell holds cardinality value
  // counts followed by the count of masked pairs. Symmetric relations use
  // only cells with row <= col.
  Grid<Count> counts;
  // Same shape, one probability vector per cell. Instantiated mode only.
  Grid<double> params;

  bool operator==(const RelationState&) const = default;
};

struct LatentState {
  SamplerMode mode = SamplerMode::kCollapsed;
  std::vector<ClassState> classes;
  std::vector<RelationState> relations;

  int cluster_count(int entity_class) const {
    return classes[entity_class].cluster_count();
  }

  bool operator==(const LatentState&) const = default;
};

// A relation seen from one of its entity classes. Directed self-relations
// contribute two links (subject and object role) to their class; symmetric
// ones a single kSubject link.
struct RelationLink {
  int relation = 0;
  Role role = Role::kSubject;
  int counterpart_class = 0;
};

// Priors and relation geometry resolved from a dataset's schema. Cheap to
// copy; shares the dataset.
class Model {
 public:
  struct RelationGeometry {
    int subject_class = 0;
    int object_class = 0;
    int cardinality = 2;
    bool closed_world = false;
    bool symmetric = false;
    bool self_relation = false;
  };

  // Throws SchemaError when any prior strength is unset.
  explicit Model(std::shared_ptr<const Dataset> dataset);

  const Dataset& dataset() const { return *dataset_; }
  const std::shared_ptr<const Dataset>& dataset_ptr() const { return dataset_; }
  const Schema& schema() const { return dataset_->schema(); }
  int class_count() const { return static_cast<int>(concentration_.size()); }
  int relation_count() const { return static_cast<int>(geometry_.size()); }

  double concentration(int entity_class) const {
    return concentration_[entity_class];
  }
  const DirichletPrior& attribute_prior(int entity_class, int attribute) const {
    return attribute_priors_[entity_class][attribute];
  }
  int attribute_count(int entity_class) const {
    return static_cast<int>(attribute_priors_[entity_class].size());
  }
  const DirichletPrior& relation_prior(int relation) const {
    return relation_priors_[relation];
  }
  const RelationGeometry& relation(int relation) const {
    return geometry_[relation];
  }
  std::span<const RelationLink> links(int entity_class) const {
    return links_[entity_class];
  }

  // Cell holding pairs whose subject is in `subject_cluster` and object in
  // `object_cluster` (ordered for symmetric relations).
  std::pair<int, int> cell_of(int relation, int subject_cluster,
                              int object_cluster) const;

  // Number of entity pairs falling in a cell under the current occupancies.
  Count candidate_pairs(const LatentState& state, int relation, int row,
                        int col) const;

  // Value counts of a cell with closed-world absences made explicit.
  void effective_counts(const LatentState& state, int relation, int row,
                        int col, std::span<Count> out) const;

 private:
  std::shared_ptr<const Dataset> dataset_;
  std::vector<double> concentration_;
  std::vector<std::vector<DirichletPrior>> attribute_priors_;
  std::vector<DirichletPrior> relation_priors_;
  std::vector<RelationGeometry> geometry_;
  std::vector<std::vector<RelationLink>> links_;
};

// Builds a state from assignments by counting sufficient statistics from
// scratch. cluster_counts (per class) may exceed the largest label to
// create empty clusters. Instantiated-mode parameters are set to posterior
// means.
LatentState build_state(const Model& model,
                        std::vector<std::vector<int>> assignments,
                        SamplerMode mode,
                        std::optional<std::vector<int>> cluster_counts = {});

// Every violated LatentState invariant, including disagreement between the
// maintained statistics and a from-scratch recount. Empty when valid.
std::vector<std::string> state_violations(const LatentState& state,
                                          const Model& model);

// Removes the entity's contribution; its assignment becomes -1. The
// cluster may be left empty.
void remove_entity(LatentState& state, const Model& model, int entity_class,
                   int entity);
void add_entity(LatentState& state, const Model& model, int entity_class,
                int entity, int cluster);

// Appends an empty cluster and returns its index. Instantiated parameters
// of the new row/column are set to prior means.
int append_cluster(LatentState& state, const Model& model, int entity_class);

// Deletes one cluster, shifting higher labels down by one.
void erase_cluster(LatentState& state, const Model& model, int entity_class,
                   int cluster);

// Deletes every empty cluster; relabeling preserves order.
void remove_empty_clusters(LatentState& state, const Model& model);

// log P(Z) + log P(data | Z) with every parameter integrated out: CRP
// partition probabilities times Dirichlet-multinomial marginals of every
// attribute-cluster and relation-cell count table.
double joint_log_likelihood(const LatentState& state, const Model& model);

// Relabels each class's clusters in order of first appearance.
std::vector<int> canonical_labels(std::span<const int> assignment);

}  // namespace ihrm
