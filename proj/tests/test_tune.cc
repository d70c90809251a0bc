// Apache License, Version 2.0, refer to LICENSE.txt

#include <algorithm>

#include "doctest.h"
#include "ihrm/generative.hh"
#include "ihrm/tune.hh"
#include "test_util.hh"

using namespace ihrm;

namespace {

GeneratedData sharp_instance(std::uint64_t seed, bool attributes) {
  const auto schema = testing::schema_from(testing::movie_schema_json(1.0, 0.05, attributes));
  Rng rng(seed);
  const std::vector<int> sizes = {30, 30};
  return sample_generative(schema, sizes, rng);
}

ChainConfig short_chain() {
  ChainConfig chain;
  chain.iterations = 60;
  chain.burn_in = 30;
  chain.thin = 3;
  chain.seed = 17;
  return chain;
}

}  // namespace

TEST_CASE("a single grid value is returned") {
  const auto g = sharp_instance(1, true);
  Schema open = g.dataset->schema();
  set_prior_strengths(open, 1.0, 1.0, true);
  open.entity_classes[0].attributes[0].prior_strength.reset();
  TuneConfig config;
  config.grid = {0.7};
  config.folds = 2;
  config.chain = short_chain();
  const auto result = cv_tune_beta0(open, *g.dataset, config);
  CHECK(result.relation_beta0 == 0.7);
  CHECK(result.attribute_beta0 == 0.7);
  CHECK(result.scores.size() == 2);
  CHECK(missing_prior_strengths(result.tuned).empty());
  for (const auto& c : result.tuned.entity_classes) {
    for (const auto& a : c.attributes) CHECK(*a.prior_strength == 0.7);
  }
}

TEST_CASE("fold scores are reproducible") {
  const auto g = sharp_instance(2, false);
  TuneConfig config;
  config.grid = {0.1, 1.0};
  config.folds = 3;
  config.chain = short_chain();
  config.seed = 5;
  const auto a = cv_tune_beta0(g.dataset->schema(), *g.dataset, config);
  const auto b = cv_tune_beta0(g.dataset->schema(), *g.dataset, config);
  REQUIRE(a.scores.size() == 2);
  for (size_t i = 0; i < a.scores.size(); ++i) {
    CHECK(a.scores[i].target == "relations");
    CHECK(a.scores[i].fold_scores.size() == 3);
    CHECK(a.scores[i].fold_scores == b.scores[i].fold_scores);
  }
  CHECK(a.relation_beta0 == b.relation_beta0);
  CHECK_FALSE(a.attribute_beta0.has_value());
}

TEST_CASE("per-attribute tuning and argument checks") {
  const auto g = sharp_instance(3, true);
  TuneConfig config;
  config.grid = {0.5, 2.0};
  config.folds = 2;
  config.chain = short_chain();
  config.per_attribute = true;
  const auto result = cv_tune_beta0(g.dataset->schema(), *g.dataset, config);
  CHECK(result.per_attribute.size() == 3);
  CHECK(result.per_attribute.count("User.age") == 1);
  CHECK(result.per_attribute.count("Movie.genre") == 1);
  CHECK(result.scores.size() == 2 * (1 + 3));

  config.grid = {};
  CHECK_THROWS_AS(cv_tune_beta0(g.dataset->schema(), *g.dataset, config), std::invalid_argument);
  config.grid = {1.0};
  config.folds = 1;
  CHECK_THROWS_AS(cv_tune_beta0(g.dataset->schema(), *g.dataset, config), std::invalid_argument);
}

TEST_CASE("selected value is close to the true-parameter accuracy") {
  const auto g = sharp_instance(4, false);
  TuneConfig config;
  config.grid = {0.05, 0.5, 5.0};
  config.folds = 3;
  config.chain = short_chain();
  config.chain.iterations = 150;
  config.chain.burn_in = 50;
  config.seed = 8;
  const auto result = cv_tune_beta0(g.dataset->schema(), *g.dataset, config);

  // Oracle: predict with the generating parameters on the same folds.
  const auto folds = k_fold_split(*g.dataset, 0, config.folds, config.seed);
  double oracle = 0.0;
  for (const auto& f : folds) {
    double hits = 0.0;
    for (const auto& t : f.test[0]) {
      const int zu = g.truth.classes[0].assignment[t.subject];
      const int zm = g.truth.classes[1].assignment[t.object];
      const int guess = g.truth.relation_params[0].at({zu, zm})[1] > 0.5 ? 1 : 0;
      hits += guess == t.value;
    }
    oracle += hits / f.test[0].size() / folds.size();
  }
  double chosen = 0.0;
  for (const auto& s : result.scores) {
    if (s.beta0 == *result.relation_beta0) chosen = s.mean;
  }
  CHECK(chosen >= oracle - 0.01);
}
