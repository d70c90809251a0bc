// Apache License, Version 2.0, refer to LICENSE.txt

// Cross-validated choice of prior strengths.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ihrm/data.hh"
#include "ihrm/gibbs.hh"
#include "ihrm/schema.hh"

namespace ihrm {

struct TuneConfig {
  std::vector<double> grid;
  int folds = 5;
  // Relation whose held-out triples are scored.
  int relation_class = 0;
  ChainConfig chain;
  // Tune each entity attribute separately instead of one shared value.
  bool per_attribute = false;
  // Seed of the fold assignment.
  std::uint64_t seed = 0;
};

struct GridScore {
  // "relations", "attributes" or "<Class>.<attribute>".
  std::string target;
  double beta0 = 0.0;
  std::vector<double> fold_scores;
  double mean = 0.0;
};

struct TuneResult {
  std::optional<double> relation_beta0;
  std::optional<double> attribute_beta0;
  std::map<std::string, double> per_attribute;
  std::vector<GridScore> scores;
  // Input schema with every tuned strength written in.
  Schema tuned;
};

// Grid search of held-out accuracy over k folds. Relation strengths are
// tuned first (one shared value), then entity attribute strengths with the
// relation value fixed. Strengths still unset while another group is tuned
// take the grid median. Ties go to the smallest value. Throws
// std::invalid_argument on an empty grid or folds < 2, DataError when the
// relation has fewer triples than folds.
TuneResult cv_tune_beta0(const Schema& schema, const Dataset& dataset,
                         const TuneConfig& config);

}  // namespace ihrm
