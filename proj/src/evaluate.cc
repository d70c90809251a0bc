// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/evaluate.hh"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ihrm {

double accuracy(std::span<const PredictionResult> predictions,
                std::span<const int> truth, double threshold) {
  if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("accuracy: predictions and truth differ in length");
  }
  size_t correct = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i].distribution;
    int predicted = 0;
    if (p.size() == 2) {
      predicted = p[1] > threshold ? 1 : 0;
    } else {
      predicted = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    if (predicted == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::vector<int> default_topn() {
  std::vector<int> out;
  for (int n = 5; n <= 50; n += 5) out.push_back(n);
  return out;
}

RocCurve roc_topn(const std::vector<std::vector<double>>& scores,
                  const std::vector<std::vector<int>>& positives,
                  std::span<const int> n_values) {
  if (scores.size() != positives.size()) {
    throw std::invalid_argument("roc_topn: scores and positives differ in length");
  }
  struct Ranked {
    std::vector<int> order;
    std::vector<bool> positive;
    int positive_count = 0;
  };
  std::vector<Ranked> subjects;
  for (size_t s = 0; s < scores.size(); ++s) {
    const auto& row = scores[s];
    if (row.empty()) {
      throw std::invalid_argument("roc_topn: subject " + std::to_string(s) +
                                  " has no candidates");
    }
    Ranked ranked;
    ranked.order.resize(row.size());
    std::iota(ranked.order.begin(), ranked.order.end(), 0);
    std::stable_sort(ranked.order.begin(), ranked.order.end(),
                     [&](int a, int b) { return row[a] > row[b]; });
    ranked.positive.assign(row.size(), false);
    for (int o : positives[s]) {
      if (o < 0 || o >= static_cast<int>(row.size())) {
        throw std::invalid_argument("roc_topn: positive index out of range");
      }
      if (!ranked.positive[o]) ++ranked.positive_count;
      ranked.positive[o] = true;
    }
    subjects.push_back(std::move(ranked));
  }

  RocCurve curve;
  for (int n : n_values) {
    double sensitivity = 0.0;
    double fallout = 0.0;
    int with_positives = 0;
    int with_negatives = 0;
    for (const auto& ranked : subjects) {
      const int size = static_cast<int>(ranked.order.size());
      const int top = std::min(n, size);
      int hits = 0;
      for (int i = 0; i < top; ++i) hits += ranked.positive[ranked.order[i]] ? 1 : 0;
      const int negatives = size - ranked.positive_count;
      if (ranked.positive_count > 0) {
        sensitivity += static_cast<double>(hits) / ranked.positive_count;
        ++with_positives;
      }
      if (negatives > 0) {
        fallout += static_cast<double>(top - hits) / negatives;
        ++with_negatives;
      }
    }
    curve.points.push_back(
        {n, with_positives ? sensitivity / with_positives : 0.0,
         with_negatives ? fallout / with_negatives : 0.0});
  }
  return curve;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("adjusted_rand_index: length mismatch");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("adjusted_rand_index: need at least two items");
  }
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  const auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [cell, n] : joint) index += pairs(n);
  double row_sum = 0.0;
  for (const auto& [label, n] : rows) row_sum += pairs(n);
  double col_sum = 0.0;
  for (const auto& [label, n] : cols) col_sum += pairs(n);
  const double expected = row_sum * col_sum / pairs(static_cast<double>(a.size()));
  const double maximum = 0.5 * (row_sum + col_sum);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

std::vector<int> consensus_partition(const std::vector<std::vector<int>>& partitions) {
  if (partitions.empty()) throw std::invalid_argument("consensus_partition: no partitions");
  const size_t n = partitions.front().size();
  for (const auto& p : partitions) {
    if (p.size() != n) throw std::invalid_argument("consensus_partition: length mismatch");
  }
  // Upper triangle of the co-assignment frequencies.
  std::vector<double> together(n * n, 0.0);
  for (const auto& p : partitions) {
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        if (p[i] == p[j]) together[i * n + j] += 1.0;
      }
    }
  }
  for (double& x : together) x /= static_cast<double>(partitions.size());
  size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < partitions.size(); ++s) {
    const auto& p = partitions[s];
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        const double d = (p[i] == p[j] ? 1.0 : 0.0) - together[i * n + j];
        loss += d * d;
      }
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = s;
    }
  }
  return partitions[best];
}

int posterior_mode(std::span<const int> cluster_counts) {
  if (cluster_counts.empty()) throw std::invalid_argument("posterior_mode: empty input");
  std::map<int, int> frequency;
  for (int k : cluster_counts) ++frequency[k];
  int mode = frequency.begin()->first;
  int best = 0;
  for (const auto& [k, f] : frequency) {
    if (f > best) {
      best = f;
      mode = k;
    }
  }
  return mode;
}

}  // namespace ihrm
