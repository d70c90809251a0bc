// Apache License, Version 2.0, refer to LICENSE.txt

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ihrm/generative.hh"
#include "ihrm/predict.hh"
#include "test_util.hh"

using namespace ihrm;

namespace {

void check_distribution(const std::vector<double>& p) {
  CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9);
  for (double x : p) CHECK(x >= 0.0);
}

// Four users rate movie 0 as 0, 0, 0, 1; user 4 has not rated it.
std::shared_ptr<const Dataset> rated_movie(double beta0) {
  const auto schema = testing::schema_from(testing::movie_schema_json(1.0, beta0, false));
  return std::make_shared<const Dataset>(
      schema, std::vector{AttributeTable(5, 0), AttributeTable(2, 0)},
      std::vector<RelationObservations>{{{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 1}}, {}}});
}

}  // namespace

TEST_CASE("relation prediction from parameters and averages") {
  const Model model(rated_movie(2.0));
  auto a = build_state(model, {{0, 0, 0, 0, 0}, {0, 1}}, SamplerMode::kInstantiated);
  auto cell = a.relations[0].params.cell(0, 0);
  cell[0] = 0.2;
  cell[1] = 0.8;
  const RelationQuery q{0, 4, 0};
  const std::vector<LatentState> one = {a};
  auto r = predict_relation(one, model, q);
  CHECK(r.distribution[0] == doctest::Approx(0.2));
  CHECK(r.distribution[1] == doctest::Approx(0.8));
  CHECK(r.samples_used == 1);

  auto b = a;
  b.relations[0].params.cell(0, 0)[0] = 0.4;
  b.relations[0].params.cell(0, 0)[1] = 0.6;
  const std::vector<LatentState> two = {a, b};
  r = predict_relation(two, model, q);
  CHECK(r.distribution[1] == doctest::Approx(0.7));
  CHECK(r.samples_used == 2);
}

TEST_CASE("collapsed relation prediction uses the cell counts") {
  const Model model(rated_movie(2.0));
  const std::vector<LatentState> s = {
      build_state(model, {{0, 0, 0, 0, 0}, {0, 1}}, SamplerMode::kCollapsed)};
  const auto r = predict_relation(s, model, RelationQuery{0, 4, 0});
  CHECK(r.distribution[0] == doctest::Approx(2.0 / 3));
  CHECK(r.distribution[1] == doctest::Approx(1.0 / 3));
  // An observed pair is scored without itself: user 3's own 1 is removed.
  const auto own = predict_relation(s, model, RelationQuery{0, 3, 0});
  CHECK(own.distribution[0] == doctest::Approx((3 + 1.0) / (3 + 2.0)));
}

TEST_CASE("closed-world prediction removes the pair's implied absence") {
  const auto schema = testing::schema_from(testing::mixed_schema_json());
  Rng rng(6);
  const auto data = testing::random_dataset(schema, {8, 4}, 0.3, rng);
  const Model model(data);
  const auto state = build_state(model, {{0, 0, 1, 1, 0, 2, 2, 1}, {0, 1, 0, 1}},
                                 SamplerMode::kCollapsed);
  const std::vector<LatentState> s = {state};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if (i == j) continue;
      const auto found = data->find_pair(1, i, j);
      const int zi = state.classes[0].assignment[i];
      const int zj = state.classes[0].assignment[j];
      std::vector<Count> counts(3);
      model.effective_counts(state, 1, zi, zj, counts);
      if (!found) {
        --counts[0];
      } else if (*found != kMissing) {
        --counts[*found];
      }
      const auto expect = posterior_predictive(counts, model.relation_prior(1));
      const auto got = predict_relation(s, model, RelationQuery{1, i, j}).distribution;
      for (int v = 0; v < 3; ++v) CHECK(got[v] == doctest::Approx(expect[v]).epsilon(1e-14));
      check_distribution(got);
    }
  }
  CHECK_THROWS_AS(predict_relation(s, model, RelationQuery{1, 2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(predict_relation(s, model, RelationQuery{1, 2, 8}), std::out_of_range);
  CHECK_THROWS_AS(predict_relation({}, model, RelationQuery{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("attribute prediction") {
  const auto schema = testing::schema_from(
      R"({"entity_classes":[{"name":"A","attributes":[{"name":"x","cardinality":2,)"
      R"("prior_strength":1.5,"prior_base":[0.3,0.7]}]}]})");
  AttributeTable t(3, 1);
  t.set(0, 0, 0);
  t.set(1, 0, 1);
  t.set(2, 0, 1);
  const Model model(std::make_shared<const Dataset>(schema, std::vector{t},
                                                    std::vector<RelationObservations>{}));
  auto inst = build_state(model, {{0, 1, 1}}, SamplerMode::kInstantiated);
  inst.classes[0].attribute_params[0].cell(0, 0)[0] = 0.9;
  inst.classes[0].attribute_params[0].cell(0, 0)[1] = 0.1;
  const std::vector<LatentState> one = {inst};
  const auto r = predict_attribute(one, model, AttributeQuery{0, 0, 0});
  CHECK(r.distribution[0] == doctest::Approx(0.9));

  // Entity 0 alone in its cluster: excluding its value leaves the prior.
  const std::vector<LatentState> collapsed = {
      build_state(model, {{0, 1, 1}}, SamplerMode::kCollapsed)};
  const auto p = predict_attribute(collapsed, model, AttributeQuery{0, 0, 0});
  CHECK(p.distribution[0] == doctest::Approx(0.3));
  CHECK(p.distribution[1] == doctest::Approx(0.7));

  const std::vector<LatentState> both = {collapsed[0],
                                         build_state(model, {{0, 0, 0}}, SamplerMode::kCollapsed)};
  const auto avg = predict_attribute(both, model, AttributeQuery{0, 1, 0});
  const auto first = predict_attribute(std::span(both).first(1), model, AttributeQuery{0, 1, 0});
  const auto second = predict_attribute(std::span(both).last(1), model, AttributeQuery{0, 1, 0});
  for (int v = 0; v < 2; ++v) {
    CHECK(avg.distribution[v] ==
          doctest::Approx((first.distribution[v] + second.distribution[v]) / 2));
  }
  CHECK_THROWS_AS(predict_attribute(both, model, AttributeQuery{0, 3, 0}), std::out_of_range);
}

TEST_CASE("predictions are invariant to relabeling and duplicate snapshots") {
  const auto schema = testing::schema_from(testing::mixed_schema_json());
  Rng rng(10);
  const auto data = testing::random_dataset(schema, {7, 4}, 0.4, rng);
  const Model model(data);
  for (auto mode : {SamplerMode::kCollapsed, SamplerMode::kInstantiated}) {
    const std::vector<std::vector<int>> z = {{0, 1, 2, 0, 1, 2, 2}, {0, 1, 1, 0}};
    const std::vector<std::vector<int>> relabeled = {{2, 0, 1, 2, 0, 1, 1}, {1, 0, 0, 1}};
    const std::vector<std::vector<int>> other = {{0, 0, 0, 1, 1, 1, 1}, {0, 0, 0, 0}};
    const std::vector<LatentState> a = {build_state(model, z, mode)};
    const std::vector<LatentState> b = {build_state(model, relabeled, mode)};
    const std::vector<LatentState> pair = {a[0], build_state(model, other, mode)};
    const std::vector<LatentState> doubled = {pair[0], pair[1], pair[0], pair[1]};
    for (int r = 0; r < 3; ++r) {
      const int s = model.relation(r).subject_class;
      const int o = model.relation(r).object_class;
      for (int i = 0; i < data->entity_count(s); ++i) {
        for (int j = 0; j < data->entity_count(o); ++j) {
          if (model.relation(r).self_relation && i == j) continue;
          const RelationQuery q{r, i, j};
          CHECK(predict_relation(a, model, q).distribution ==
                predict_relation(b, model, q).distribution);
          const auto x = predict_relation(pair, model, q).distribution;
          const auto y = predict_relation(doubled, model, q).distribution;
          for (size_t v = 0; v < x.size(); ++v) CHECK(x[v] == doctest::Approx(y[v]).epsilon(1e-15));
          check_distribution(x);
        }
      }
    }
  }
}

TEST_CASE("fold-in without observations follows the seating weights") {
  const auto schema = testing::schema_from(testing::mixed_schema_json());
  Rng rng(12);
  const auto data = testing::random_dataset(schema, {6, 3}, 0.5, rng);
  const Model model(data);
  const auto state = build_state(model, {{0, 0, 0, 1, 1, 2}, {0, 0, 1}}, SamplerMode::kCollapsed);
  const std::vector<LatentState> s = {state};
  const NewEntity blank{0, {}, {}, false};
  const auto w = fold_in_entity(s, model, blank)[0];
  const double alpha = 1.5;
  const double total = 6 + alpha;
  REQUIRE(w.size() == 4);
  CHECK(w[0] == doctest::Approx(3 / total));
  CHECK(w[1] == doctest::Approx(2 / total));
  CHECK(w[2] == doctest::Approx(1 / total));
  CHECK(w[3] == doctest::Approx(alpha / total));

  // Mixing over those weights: cluster predictives plus the prior base.
  const auto attr = predict_fold_in_attribute(s, model, FoldInAttributeQuery{blank, 0});
  const auto& prior = model.attribute_prior(0, 0);
  std::vector<double> expect(3, 0.0);
  for (int k = 0; k < 3; ++k) {
    const auto p = posterior_predictive(state.classes[0].attribute_counts[0].cell(k, 0), prior);
    for (int v = 0; v < 3; ++v) expect[v] += w[k] * p[v];
  }
  for (int v = 0; v < 3; ++v) expect[v] += w[3] * prior.base[v];
  for (int v = 0; v < 3; ++v) CHECK(attr.distribution[v] == doctest::Approx(expect[v]));

  // Drug 1 is in cluster 0; a new gene is scored against each gene cluster.
  const auto rel = predict_fold_in_relation(
      s, model, FoldInRelationQuery{blank, 2, Role::kObject, 1});
  std::vector<double> rexpect(2, 0.0);
  for (int k = 0; k < 3; ++k) {
    std::vector<Count> counts(2);
    model.effective_counts(state, 2, 0, k, counts);
    const auto p = posterior_predictive(counts, model.relation_prior(2));
    for (int v = 0; v < 2; ++v) rexpect[v] += w[k] * p[v];
  }
  for (int v = 0; v < 2; ++v) rexpect[v] += w[3] * model.relation_prior(2).base[v];
  for (int v = 0; v < 2; ++v) CHECK(rel.distribution[v] == doctest::Approx(rexpect[v]));
  check_distribution(rel.distribution);

  CHECK_THROWS(predict_fold_in_relation(s, model, FoldInRelationQuery{blank, 2, Role::kObject, 9}));
}

TEST_CASE("fold-in weights are normalized") {
  const auto schema = testing::schema_from(testing::mixed_schema_json());
  Rng rng(13);
  const auto data = testing::random_dataset(schema, {9, 4}, 0.4, rng);
  const Model model(data);
  std::vector<LatentState> samples;
  for (int i = 0; i < 5; ++i) samples.push_back(initial_state(model, SamplerMode::kCollapsed, rng));
  NewEntity e{0, {2}, {{0, Role::kSubject, 3, 1}, {1, Role::kObject, 2, 2}, {2, Role::kObject, 1, 0}},
              true};
  for (const auto& w : fold_in_entity(samples, model, e)) check_distribution(w);
  const auto before = samples;
  check_distribution(
      predict(samples, model, Query{FoldInRelationQuery{e, 0, Role::kSubject, 5}}).distribution);
  check_distribution(
      predict(samples, model, Query{FoldInRelationQuery{e, 1, Role::kSubject, 2}}).distribution);
  check_distribution(predict(samples, model, Query{FoldInAttributeQuery{e, 0}}).distribution);
  CHECK(samples == before);
}

namespace {

// Every two clusters of one class differ by more than 0.9 in P(R = 1)
// against some cluster of the other class.
bool well_separated(const GroundTruth& truth) {
  const auto& gamma = truth.relation_params[0];
  const int ku = truth.classes[0].cluster_count;
  const int km = truth.classes[1].cluster_count;
  auto p = [&](int u, int m) { return gamma.at({u, m})[1]; };
  for (int a = 0; a < ku; ++a) {
    for (int b = a + 1; b < ku; ++b) {
      bool differs = false;
      for (int m = 0; m < km; ++m) differs |= std::abs(p(a, m) - p(b, m)) > 0.9;
      if (!differs) return false;
    }
  }
  for (int a = 0; a < km; ++a) {
    for (int b = a + 1; b < km; ++b) {
      bool differs = false;
      for (int u = 0; u < ku; ++u) differs |= std::abs(p(u, a) - p(u, b)) > 0.9;
      if (!differs) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("fold-in recovers the cluster of an identical entity") {
  const auto schema = testing::schema_from(testing::movie_schema_json(1.0, 0.05, false));
  const std::vector<int> sizes = {40, 40};
  GeneratedData g;
  for (std::uint64_t seed = 1;; ++seed) {
    Rng rng(seed);
    g = sample_generative(schema, sizes, rng);
    if (g.truth.classes[0].cluster_count > 1 && well_separated(g.truth)) break;
  }
  const Model model(g.dataset);
  ChainConfig config;
  config.iterations = 300;
  config.burn_in = 100;
  config.thin = 2;
  config.seed = 3;
  const auto samples = run_gibbs(model, config);
  // The user in the largest true cluster.
  const auto& truth = g.truth.classes[0].assignment;
  std::vector<int> sizes_of(g.truth.classes[0].cluster_count, 0);
  for (int k : truth) ++sizes_of[k];
  const int big = static_cast<int>(std::max_element(sizes_of.begin(), sizes_of.end()) -
                                   sizes_of.begin());
  const int j = static_cast<int>(std::find(truth.begin(), truth.end(), big) - truth.begin());
  NewEntity copy{0, {}, {}, false};
  for (const auto& inc : g.dataset->incident(0, Role::kSubject, j)) {
    copy.relations.push_back({0, Role::kSubject, inc.counterpart, inc.value});
  }
  const auto weights = fold_in_entity(samples.snapshots, model, copy);
  int hits = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const int argmax = static_cast<int>(std::max_element(weights[i].begin(), weights[i].end()) -
                                        weights[i].begin());
    hits += argmax == samples.snapshots[i].classes[0].assignment[j];
  }
  CHECK(hits >= 0.95 * weights.size());
}

TEST_CASE("relation score") {
  PredictionResult r{RelationQuery{}, {0.25, 0.5, 0.25}, 1};
  CHECK(relation_score(r, true) == doctest::Approx(0.75));
  CHECK(relation_score(r, false) == doctest::Approx(0.25));
}
