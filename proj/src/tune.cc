// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/tune.hh"

#include <algorithm>
#include <memory>
#include <stdexcept>

#include "ihrm/evaluate.hh"
#include "ihrm/predict.hh"

namespace ihrm {

namespace {

double fold_accuracy(const Schema& schema, const SplitDataset& fold, int relation,
                     const ChainConfig& chain) {
  auto shared = std::make_shared<const Schema>(schema);
  auto train = std::make_shared<const Dataset>(fold.train->with_schema(shared));
  const Model model(train);
  const auto samples = run_gibbs(model, chain);
  std::vector<PredictionResult> predictions;
  std::vector<int> truth;
  for (const auto& t : fold.test[relation]) {
    predictions.push_back(
        predict_relation(samples.snapshots, model, {relation, t.subject, t.object}));
    truth.push_back(t.value);
  }
  return accuracy(predictions, truth);
}

}  // namespace

TuneResult cv_tune_beta0(const Schema& schema, const Dataset& dataset,
                         const TuneConfig& config) {
  if (config.grid.empty()) throw std::invalid_argument("cv_tune_beta0: empty grid");
  if (config.folds < 2) throw std::invalid_argument("cv_tune_beta0: folds must be >= 2");
  for (double b : config.grid) {
    if (!(b > 0.0)) throw std::invalid_argument("cv_tune_beta0: grid values must be > 0");
  }
  config.chain.validate();
  std::vector<double> grid = config.grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const double median = grid[grid.size() / 2];

  const auto folds = k_fold_split(dataset, config.relation_class, config.folds, config.seed);

  TuneResult result;
  result.tuned = schema;
  set_prior_strengths(result.tuned, median, median, /*overwrite=*/false);

  // Evaluates every grid value with `apply` writing it into a copy of the
  // current schema, then keeps the best.
  const auto search = [&](const std::string& target, auto apply) {
    double best_value = grid.front();
    double best_mean = -1.0;
    for (double beta0 : grid) {
      Schema candidate = result.tuned;
      apply(candidate, beta0);
      GridScore score{target, beta0, {}, 0.0};
      for (size_t f = 0; f < folds.size(); ++f) {
        ChainConfig chain = config.chain;
        chain.seed = derive_seed(config.chain.seed, f);
        score.fold_scores.push_back(
            fold_accuracy(candidate, folds[f], config.relation_class, chain));
        score.mean += score.fold_scores.back();
      }
      score.mean /= static_cast<double>(folds.size());
      if (score.mean > best_mean) {
        best_mean = score.mean;
        best_value = beta0;
      }
      result.scores.push_back(std::move(score));
    }
    apply(result.tuned, best_value);
    return best_value;
  };

  if (!schema.relation_classes.empty()) {
    result.relation_beta0 = search("relations", [](Schema& s, double b) {
      set_prior_strengths(s, std::nullopt, b, /*overwrite=*/true);
    });
  }
  bool any_attributes = false;
  for (const auto& c : schema.entity_classes) any_attributes |= !c.attributes.empty();
  if (!any_attributes) return result;
  if (!config.per_attribute) {
    result.attribute_beta0 = search("attributes", [](Schema& s, double b) {
      set_prior_strengths(s, b, std::nullopt, /*overwrite=*/true);
    });
    return result;
  }
  for (size_t c = 0; c < schema.entity_classes.size(); ++c) {
    for (size_t a = 0; a < schema.entity_classes[c].attributes.size(); ++a) {
      const std::string target =
          schema.entity_classes[c].name + "." + schema.entity_classes[c].attributes[a].name;
      result.per_attribute[target] = search(target, [c, a](Schema& s, double b) {
        s.entity_classes[c].attributes[a].prior_strength = b;
      });
    }
  }
  return result;
}

}  // namespace ihrm
