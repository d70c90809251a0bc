// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <vector>

#include "ihrm/predict.hh"

namespace ihrm {

// Fraction of predictions matching the truth. Binary outcomes predict 1 iff
// P(1) > threshold; larger cardinalities take the argmax (lowest code on
// ties). Throws std::invalid_argument on empty or misaligned input.
double accuracy(std::span<const PredictionResult> predictions,
                std::span<const int> truth, double threshold = 0.5);

struct RocPoint {
  int n = 0;
  double sensitivity = 0.0;
  double one_minus_specificity = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

// N = 5, 10, ..., 50.
std::vector<int> default_topn();

// scores[s][o]: score of candidate object o for subject s. positives[s]:
// object indices actually present. Each subject recommends its top N
// objects (ties to the lower object index). Sensitivity is averaged over
// subjects with at least one positive, 1 - specificity over subjects with
// at least one negative. Throws std::invalid_argument when a subject has no
// candidates.
RocCurve roc_topn(const std::vector<std::vector<double>>& scores,
                  const std::vector<std::vector<int>>& positives,
                  std::span<const int> n_values);

// Adjusted Rand index from the pair-counting contingency table. 1 when the
// index is undefined because both partitions are trivial and equal.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

// The sampled partition closest in squared distance to the posterior
// co-assignment matrix.
std::vector<int> consensus_partition(const std::vector<std::vector<int>>& partitions);

// Most frequent cluster count; ties to the smaller count.
int posterior_mode(std::span<const int> cluster_counts);

}  // namespace ihrm
