// Apache License, Version 2.0, refer to LICENSE.txt

// Dirichlet-multinomial conjugacy: marginal likelihoods and posterior
// predictive probabilities of count vectors under Dir(beta0 * beta).

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ihrm/schema.hh"

namespace ihrm {

using Count = std::int64_t;

// Dir(strength * base), with alpha = strength * base precomputed.
struct DirichletPrior {
  double strength = 1.0;
  std::vector<double> base;
  std::vector<double> alpha;

  DirichletPrior() = default;
  DirichletPrior(double strength, std::vector<double> base);
  // Throws SchemaError if the attribute has no prior_strength.
  static DirichletPrior from_attribute(const AttributeSpec& attribute);

  int cardinality() const { return static_cast<int>(base.size()); }
};

// log Gamma(a + n) / Gamma(a), the log rising factorial.
double log_rising(double a, Count n);

// log of Gamma(beta0) / Gamma(beta0 + n) * prod_v Gamma(beta0 beta_v +
// counts_v) / Gamma(beta0 beta_v). Throws std::invalid_argument on a
// dimension mismatch.
double dirichlet_multinomial_marginal(std::span<const Count> counts,
                                      double beta0,
                                      std::span<const double> beta);
double dirichlet_multinomial_marginal(std::span<const Count> counts,
                                      const DirichletPrior& prior);

// (counts_v + beta0 beta_v) / (sum(counts) + beta0). Throws
// std::out_of_range for a value outside 0..r-1.
double posterior_predictive_prob(int value, std::span<const Count> counts,
                                 double beta0, std::span<const double> beta);
double posterior_predictive_prob(int value, std::span<const Count> counts,
                                 const DirichletPrior& prior);

// log p(added | base) with the parameter integrated out, i.e.
// marginal(base + added) - marginal(base).
double log_marginal_ratio(std::span<const Count> base,
                          std::span<const Count> added,
                          const DirichletPrior& prior);

// Posterior predictive distribution over every value.
std::vector<double> posterior_predictive(std::span<const Count> counts,
                                         const DirichletPrior& prior);

}  // namespace ihrm
