// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/random.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ihrm {

namespace {

// log of a Gamma(shape, 1) draw.
double log_gamma_draw(double shape, Rng& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    double g = gamma(rng);
    while (g <= 0.0) g = gamma(rng);
    return std::log(g);
  }
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  while (u <= 0.0) u = uniform(rng);
  return std::log(gamma(rng)) + std::log(u) / shape;
}

}  // namespace

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> out(alpha.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] > 0.0) {
      out[i] = log_gamma_draw(alpha[i], rng);
      max_log = std::max(max_log, out[i]);
    } else {
      out[i] = -std::numeric_limits<double>::infinity();
    }
  }
  if (!std::isfinite(max_log)) {
    throw std::invalid_argument("sample_dirichlet: no positive parameter");
  }
  double total = 0.0;
  for (double& x : out) {
    x = std::exp(x - max_log);
    total += x;
  }
  for (double& x : out) x /= total;
  return out;
}

int sample_categorical(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double target = uniform(rng) * total;
  double cumulative = 0.0;
  int last_positive = -1;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = static_cast<int>(i);
    if (target < cumulative) return last_positive;
  }
  if (last_positive < 0) {
    throw std::domain_error("sample_categorical: all weights are zero");
  }
  // Rounding can leave target at the total.
  return last_positive;
}

void normalize_log_weights(std::span<double> log_weights) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) {
    if (std::isnan(w)) throw std::domain_error("log weight is NaN");
    max_log = std::max(max_log, w);
  }
  if (!std::isfinite(max_log)) {
    throw std::domain_error("every log weight is -inf or +inf");
  }
  double total = 0.0;
  for (double& w : log_weights) {
    w = std::exp(w - max_log);
    total += w;
  }
  for (double& w : log_weights) w /= total;
}

int sample_log_categorical(std::span<const double> log_weights, Rng& rng) {
  std::vector<double> weights(log_weights.begin(), log_weights.end());
  normalize_log_weights(weights);
  return sample_categorical(weights, rng);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq sequence{static_cast<std::uint32_t>(seed),
                         static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(index),
                         static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  sequence.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace ihrm
