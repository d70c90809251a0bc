// Apache License, Version 2.0, refer to LICENSE.txt

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ihrm/conjugate.hh"
#include "ihrm/random.hh"
#include "test_util.hh"

using namespace ihrm;

namespace {

// E[theta_value] under Beta(a0, a1) by quadrature of the unnormalized
// densities.
double beta_mean_by_quadrature(double a0, double a1, int value) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  const auto density = [&](double t, double e0, double e1) {
    return std::pow(t, a0 - 1 + e0) * std::pow(1 - t, a1 - 1 + e1);
  };
  const double z = integrator.integrate([&](double t) { return density(t, 0, 0); }, 0.0, 1.0);
  const double m = integrator.integrate(
      [&](double t) { return density(t, value == 0, value == 1); }, 0.0, 1.0);
  return m / z;
}

}  // namespace

TEST_CASE("marginal examples") {
  const std::vector<Count> zero = {0, 0, 0};
  const std::vector<double> third = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(dirichlet_multinomial_marginal(zero, 0.7, third) == 0.0);

  const std::vector<Count> one = {0, 0, 1, 0};
  const std::vector<double> quarter(4, 0.25);
  CHECK(dirichlet_multinomial_marginal(one, 3.0, quarter) ==
        doctest::Approx(std::log(0.25)).epsilon(1e-14));

  const std::vector<Count> two = {2, 0};
  const std::vector<double> half = {0.5, 0.5};
  CHECK(dirichlet_multinomial_marginal(two, 2.0, half) ==
        doctest::Approx(std::log(1.0 / 3)).epsilon(1e-14));
  // Independent check: the integral of t^2 under the uniform density.
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double quad = integrator.integrate([](double t) { return t * t; }, 0.0, 1.0);
  CHECK(quad == doctest::Approx(1.0 / 3).epsilon(1e-10));

  CHECK_THROWS_AS(dirichlet_multinomial_marginal(two, 2.0, quarter), std::invalid_argument);
}

TEST_CASE("predictive examples") {
  const std::vector<double> half = {0.5, 0.5};
  const std::vector<Count> zero = {0, 0};
  const std::vector<double> base = {0.2, 0.8};
  CHECK(posterior_predictive_prob(1, zero, 5.0, base) == doctest::Approx(0.8));

  const std::vector<Count> c31 = {3, 1};
  CHECK(posterior_predictive_prob(0, c31, 2.0, half) == doctest::Approx(2.0 / 3));
  CHECK(beta_mean_by_quadrature(4.0, 2.0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-9));

  const std::vector<Count> big = {1000, 0};
  CHECK(posterior_predictive_prob(0, big, 2.0, half) == doctest::Approx(1001.0 / 1002));

  CHECK_THROWS_AS(posterior_predictive_prob(2, c31, 2.0, half), std::out_of_range);
}

TEST_CASE("marginal equals the sequential product in any order") {
  Rng rng(11);
  std::uniform_int_distribution<int> card(2, 5);
  std::uniform_int_distribution<int> count(0, 6);
  std::uniform_real_distribution<double> strength(0.05, 8.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int r = card(rng);
    std::vector<Count> counts(r);
    std::vector<int> sequence;
    for (int v = 0; v < r; ++v) {
      counts[v] = count(rng);
      for (Count i = 0; i < counts[v]; ++i) sequence.push_back(v);
    }
    std::vector<double> alpha(r, 1.0);
    for (auto& a : alpha) a = strength(rng);
    const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    std::vector<double> base(r);
    for (int v = 0; v < r; ++v) base[v] = alpha[v] / total;
    const double beta0 = strength(rng);
    const double closed = dirichlet_multinomial_marginal(counts, beta0, base);
    for (int shuffle = 0; shuffle < 3; ++shuffle) {
      std::shuffle(sequence.begin(), sequence.end(), rng);
      const double seq = testing::sequential_log_marginal(sequence, beta0, base);
      CHECK(std::abs(closed - seq) <= 1e-12 * std::max(1.0, std::abs(seq)));
    }
  }
}

TEST_CASE("log_marginal_ratio and posterior_predictive") {
  const DirichletPrior prior(1.5, {0.2, 0.3, 0.5});
  const std::vector<Count> base = {2, 0, 1};
  const std::vector<Count> added = {1, 3, 0};
  const std::vector<Count> sum = {3, 3, 1};
  CHECK(log_marginal_ratio(base, added, prior) ==
        doctest::Approx(dirichlet_multinomial_marginal(sum, prior) -
                        dirichlet_multinomial_marginal(base, prior))
            .epsilon(1e-12));
  const auto p = posterior_predictive(base, prior);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx((0 + 0.45) / 4.5));
  CHECK(log_rising(2.5, 3) == doctest::Approx(std::log(2.5 * 3.5 * 4.5)));
  CHECK(log_rising(2.5, 0) == 0.0);
}

TEST_CASE("predictive agrees with quadrature of the posterior") {
  Rng rng(5);
  std::uniform_int_distribution<int> count(0, 6);
  std::uniform_real_distribution<double> strength(0.5, 6.0);
  std::uniform_real_distribution<double> split(0.1, 0.9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::vector<Count> counts = {count(rng), count(rng)};
    const double beta0 = strength(rng);
    const double b = split(rng);
    const std::vector<double> base = {b, 1 - b};
    const int value = trial % 2;
    const double closed = posterior_predictive_prob(value, counts, beta0, base);
    const double quad = beta_mean_by_quadrature(counts[0] + beta0 * b,
                                                counts[1] + beta0 * (1 - b), value);
    CHECK(std::abs(closed - quad) <= 1e-6);
  }
}

TEST_CASE("dirichlet and categorical sampling") {
  Rng rng(3);
  const std::vector<double> alpha = {1e-4, 2e-4, 0.0};
  for (int i = 0; i < 100; ++i) {
    const auto p = sample_dirichlet(alpha, rng);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[2] == 0.0);
  }
  const std::vector<double> w = {0.0, 3.0, 0.0};
  for (int i = 0; i < 50; ++i) CHECK(sample_categorical(w, rng) == 1);

  std::vector<double> logs = {-1000.0, -1000.0 + std::log(3.0), -INFINITY};
  normalize_log_weights(logs);
  CHECK(logs[0] == doctest::Approx(0.25));
  CHECK(logs[1] == doctest::Approx(0.75));
  CHECK(logs[2] == 0.0);
  std::vector<double> dead = {-INFINITY, -INFINITY};
  CHECK_THROWS_AS(normalize_log_weights(dead), std::domain_error);
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}
