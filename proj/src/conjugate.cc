// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/conjugate.hh"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ihrm {

namespace {

constexpr Count kSmallCount = 32;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dimensions(size_t counts, size_t beta) {
  if (counts != beta) {
    throw std::invalid_argument("count vector has " + std::to_string(counts) +
                                " entries, prior has " + std::to_string(beta));
  }
}

}  // namespace

DirichletPrior::DirichletPrior(double strength_, std::vector<double> base_)
    : strength(strength_), base(std::move(base_)) {
  alpha.reserve(base.size());
  for (double b : base) alpha.push_back(strength * b);
}

DirichletPrior DirichletPrior::from_attribute(const AttributeSpec& attribute) {
  return DirichletPrior(attribute.strength(), attribute.prior_base);
}

double log_rising(double a, Count n) {
  if (n == 0) return 0.0;
  if (a <= 0.0) return kNegInf;
  if (n < kSmallCount) {
    double product = 1.0;
    double log_sum = 0.0;
    for (Count i = 0; i < n; ++i) {
      product *= a + static_cast<double>(i);
      if (product > 1e280 || product < 1e-280) {
        log_sum += std::log(product);
        product = 1.0;
      }
    }
    return log_sum + std::log(product);
  }
  return std::lgamma(a + static_cast<double>(n)) - std::lgamma(a);
}

double dirichlet_multinomial_marginal(std::span<const Count> counts,
                                      double beta0,
                                      std::span<const double> beta) {
  check_dimensions(counts.size(), beta.size());
  if (!(beta0 > 0.0)) throw std::invalid_argument("beta0 must be positive");
  Count total = 0;
  for (Count c : counts) {
    if (c < 0) throw std::invalid_argument("negative count");
    total += c;
  }
  if (total == 0) return 0.0;

  if (total < kSmallCount) {
    // Chain rule over observations grouped by value: each factor
    // (alpha_v + i) / (beta0 + t) lies in (0, 1].
    double product = 1.0;
    double log_sum = 0.0;
    Count seen = 0;
    for (size_t v = 0; v < counts.size(); ++v) {
      const double alpha = beta0 * beta[v];
      if (counts[v] > 0 && alpha <= 0.0) return kNegInf;
      for (Count i = 0; i < counts[v]; ++i, ++seen) {
        product *= (alpha + static_cast<double>(i)) /
                   (beta0 + static_cast<double>(seen));
        if (product < 1e-280) {
          log_sum += std::log(product);
          product = 1.0;
        }
      }
    }
    return log_sum + std::log(product);
  }

  double out = -log_rising(beta0, total);
  for (size_t v = 0; v < counts.size(); ++v) {
    out += log_rising(beta0 * beta[v], counts[v]);
  }
  return out;
}

double dirichlet_multinomial_marginal(std::span<const Count> counts,
                                      const DirichletPrior& prior) {
  return dirichlet_multinomial_marginal(counts, prior.strength, prior.base);
}

double posterior_predictive_prob(int value, std::span<const Count> counts,
                                 double beta0, std::span<const double> beta) {
  check_dimensions(counts.size(), beta.size());
  if (value < 0 || value >= static_cast<int>(counts.size())) {
    throw std::out_of_range("value " + std::to_string(value) +
                            " outside 0.." +
                            std::to_string(counts.size() - 1));
  }
  Count total = 0;
  for (Count c : counts) total += c;
  return (static_cast<double>(counts[value]) + beta0 * beta[value]) /
         (static_cast<double>(total) + beta0);
}

double posterior_predictive_prob(int value, std::span<const Count> counts,
                                 const DirichletPrior& prior) {
  return posterior_predictive_prob(value, counts, prior.strength, prior.base);
}

double log_marginal_ratio(std::span<const Count> base,
                          std::span<const Count> added,
                          const DirichletPrior& prior) {
  Count base_total = 0;
  Count added_total = 0;
  double out = 0.0;
  for (size_t v = 0; v < added.size(); ++v) {
    base_total += base[v];
    if (added[v] == 0) continue;
    added_total += added[v];
    out += log_rising(prior.alpha[v] + static_cast<double>(base[v]), added[v]);
  }
  if (added_total == 0) return 0.0;
  return out - log_rising(prior.strength + static_cast<double>(base_total),
                          added_total);
}

std::vector<double> posterior_predictive(std::span<const Count> counts,
                                         const DirichletPrior& prior) {
  Count total = 0;
  for (Count c : counts) total += c;
  std::vector<double> out(counts.size());
  const double denominator = static_cast<double>(total) + prior.strength;
  for (size_t v = 0; v < counts.size(); ++v) {
    out[v] = (static_cast<double>(counts[v]) + prior.alpha[v]) / denominator;
  }
  return out;
}

}  // namespace ihrm
