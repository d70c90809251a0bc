// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ihrm {

using Rng = std::mt19937_64;

// Draw from Dirichlet(alpha) by gamma normalization. Shapes below one are
// drawn in log space (Gamma(a) = Gamma(a + 1) * U^(1/a)) so that tiny
// concentrations do not underflow to an all-zero vector. Zero entries of
// alpha yield exact zeros.
std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

// Index drawn with probability proportional to weights, using a single
// uniform variate against the cumulative sum. Zero weights are legal.
int sample_categorical(std::span<const double> weights, Rng& rng);

// Normalizes log weights in place into probabilities (max-subtraction).
// Entries of -inf become exact zeros. Throws std::domain_error when every
// entry is -inf or any entry is NaN.
void normalize_log_weights(std::span<double> log_weights);

// sample_categorical over exp(log_weights).
int sample_log_categorical(std::span<const double> log_weights, Rng& rng);

// Deterministic child seed for stream `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace ihrm
