// Apache License, Version 2.0, refer to LICENSE.txt

// Gibbs sampling over latent cluster assignments. Each entity update
// removes the entity, scores every occupied cluster by occupancy times the
// likelihood of the entity's data, scores a fresh cluster by concentration
// times the prior-marginal likelihood, and reseats the entity.
//
// Two modes share the sufficient statistics:
//   collapsed     - every parameter integrated out (Dirichlet-multinomial);
//   instantiated  - explicit attribute/relation parameter vectors that
//                   entities inherit, drawn fresh for new clusters and
//                   refreshed from their posteriors every few sweeps.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ihrm/random.hh"
#include "ihrm/state.hh"

namespace ihrm {

// An entity's data grouped for scoring: attribute codes and, per relation
// link, value counts against each counterpart cluster (closed-world implied
// absences included).
struct EntityEvidence {
  struct LinkCounts {
    RelationLink link;
    int cardinality = 2;
    // counterpart clusters × cardinality
    std::vector<Count> counts;

    std::span<const Count> group(int cluster) const {
      return {counts.data() + static_cast<size_t>(cluster) * cardinality,
              static_cast<size_t>(cardinality)};
    }
  };

  int entity_class = 0;
  std::vector<int> attributes;
  std::vector<LinkCounts> links;
};

// Evidence of a training entity. The entity must already be removed from
// the state (see remove_entity).
EntityEvidence gather_evidence(const LatentState& state, const Model& model,
                               int entity_class, int entity);

// An observation of an entity outside the training set.
struct ExternalObservation {
  int relation = 0;
  // Role the new entity plays in the relation.
  Role role = Role::kSubject;
  int counterpart = 0;
  // kMissing lists the pair without a value (never an implied absence).
  int value = 0;
};

// Evidence of an entity not in the dataset. When imply_absences is true,
// closed-world counterparts not listed in `relations` count as absences;
// otherwise they are treated as unknown.
EntityEvidence external_evidence(const LatentState& state, const Model& model,
                                 int entity_class,
                                 std::span<const int> attributes,
                                 std::span<const ExternalObservation> relations,
                                 bool imply_absences);

// log P(evidence | cluster). Collapsed: sequential posterior predictive
// over the cluster's statistics. Instantiated: the cluster's parameters.
double evidence_log_likelihood(const EntityEvidence& evidence,
                               const LatentState& state, const Model& model,
                               int cluster);

// log P(evidence) with fresh parameters drawn from the priors; evidence
// against different counterpart clusters is independent.
double evidence_new_cluster_log_likelihood(const EntityEvidence& evidence,
                                           const Model& model);

// Unnormalized log weights over the K occupied clusters followed by the new
// cluster option.
std::vector<double> evidence_log_weights(const EntityEvidence& evidence,
                                         const LatentState& state,
                                         const Model& model);

// Per-entity wrappers; the entity must be removed from the state.
double entity_log_likelihood(const LatentState& state, const Model& model,
                             int entity_class, int entity, int cluster);
double new_cluster_log_likelihood(const LatentState& state, const Model& model,
                                  int entity_class, int entity);
// Normalized conditional distribution over K + 1 options.
std::vector<double> assignment_probabilities(const LatentState& state,
                                             const Model& model,
                                             int entity_class, int entity);

// One Gibbs step for one entity. Empty clusters are deleted immediately.
void gibbs_update_entity(LatentState& state, const Model& model,
                         int entity_class, int entity, Rng& rng);

// Draws every parameter vector of one cluster from its posterior given the
// data currently assigned (attribute rows and the cluster's relation row
// and/or column).
void draw_cluster_parameters(LatentState& state, const Model& model,
                             int entity_class, int cluster, Rng& rng);

// Redraws every attribute and relation parameter vector from
// Dirichlet(prior + counts). Throws std::logic_error in collapsed mode.
void resample_parameters(LatentState& state, const Model& model, Rng& rng);

struct ChainConfig {
  int iterations = 1000;
  int burn_in = 100;
  int thin = 1;
  int param_update_period = 1;
  SamplerMode mode = SamplerMode::kCollapsed;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;
  int snapshot_count() const { return (iterations - burn_in) / thin; }
};

struct PosteriorSamples {
  ChainConfig config;
  std::vector<LatentState> snapshots;
  std::vector<int> snapshot_sweeps;
  // One entry per sweep.
  std::vector<double> log_likelihood_trace;
};

// Raised when the joint log-likelihood stops being finite.
class NumericalFault : public std::runtime_error {
 public:
  NumericalFault(const std::string& what, LatentState state, int sweep)
      : std::runtime_error(what), state_(std::move(state)), sweep_(sweep) {}
  const LatentState& state() const { return state_; }
  int sweep() const { return sweep_; }

 private:
  LatentState state_;
  int sweep_;
};

// Called after every sweep with (sweep index, state, joint log-likelihood).
using SweepObserver = std::function<void(int, const LatentState&, double)>;

// Seats every class by the CRP prior, then sweeps: each class in schema
// order, its entities in a fresh random permutation. Bit-reproducible for
// a given seed.
PosteriorSamples run_gibbs(const Model& model, const ChainConfig& config,
                           const SweepObserver& observer = {});

// Initial state of run_gibbs: sequential CRP seating per class.
LatentState initial_state(const Model& model, SamplerMode mode, Rng& rng);

}  // namespace ihrm
