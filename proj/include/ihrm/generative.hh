// Apache License, Version 2.0, refer to LICENSE.txt

// Forward sampling from the coupled Chinese restaurant process: entities of
// every class are seated in turn, each new cluster draws its attribute
// parameters, and each cluster pair draws its relation parameters the
// first time a pair of entities needs them.

#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ihrm/conjugate.hh"
#include "ihrm/data.hh"
#include "ihrm/random.hh"

namespace ihrm {

// Seating probabilities: N_i/(N+alpha0) for each existing cluster, then
// alpha0/(N+alpha0) for a new one. Throws std::invalid_argument when
// alpha0 <= 0 or an occupancy is < 1.
std::vector<double> crp_assign_probs(std::span<const Count> occupancies,
                                     double alpha0);

// Sequential seating of n >= 1 entities. Labels are contiguous in order of
// first appearance.
std::vector<int> sample_crp_partition(int n, double alpha0, Rng& rng);

// Probability that seating entities in `order` produces `assignment`,
// as a product of seating probabilities.
double crp_sequence_probability(std::span<const int> assignment,
                                std::span<const int> order, double alpha0);

// log P(partition) under the CRP: K log a + sum_k lgamma(N_k) - log (a)_N.
double crp_partition_log_prob(std::span<const int> assignment, double alpha0);

struct GroundTruth {
  struct ClassTruth {
    std::vector<int> assignment;
    int cluster_count = 0;
    // [attribute][cluster] probability vector.
    std::vector<std::vector<std::vector<double>>> attribute_params;

    bool operator==(const ClassTruth&) const = default;
  };

  std::vector<ClassTruth> classes;
  // [relation] (subject cluster, object cluster) -> probability vector.
  // Symmetric relations key cells with subject cluster <= object cluster.
  std::vector<std::map<std::pair<int, int>, std::vector<double>>> relation_params;

  bool operator==(const GroundTruth&) const = default;
};

std::vector<std::string> ground_truth_violations(const GroundTruth& truth,
                                                 const Schema& schema);

std::string ground_truth_to_json(const GroundTruth& truth, const Schema& schema);
GroundTruth ground_truth_from_json(const std::string& text, const Schema& schema);

struct GeneratedData {
  std::shared_ptr<const Dataset> dataset;
  GroundTruth truth;
};

// Every attribute cell and every candidate pair is emitted (closed-world
// value 0 is left implicit). Requires every prior strength to be set and
// sizes[c] >= 1.
GeneratedData sample_generative(std::shared_ptr<const Schema> schema,
                                std::span<const int> sizes, Rng& rng);

}  // namespace ihrm
