#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "margauss/baselines.hpp"
#include "margauss/marginal_logistic.hpp"
#include "margauss/marginal_probit.hpp"
#include "oracles.hpp"

using namespace margauss;
using margauss::testing::simpson;
using margauss::testing::tilted_moments;

TEST_CASE("ADF leaves inactive features alone") {
  const GaussianParam p{0.3, 0.7};
  const GaussianParam q = adf_feature_update(p, 1, 0.0, {1.0, 2.0});
  CHECK(q.mean == p.mean);
  CHECK(q.variance == p.variance);
}

TEST_CASE("ADF matches quadrature moments of the tilted posterior") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> mu(-2, 2), var(0.05, 3), xs(-2, 2), ev(0, 5);
  const double kappa = std::sqrt(kPiOver8);
  double worst_bridge = 0.0, worst_sigmoid = 0.0;
  for (int rep = 0; rep < 300; ++rep) {
    const GaussianParam p{mu(rng), var(rng)};
    const int y = rep % 2 ? 1 : -1;
    const double x = xs(rng);
    const ExcludedPrior excl{mu(rng), ev(rng)};
    const double shrink = logistic_shrink(excl);
    const GaussianParam got = adf_feature_update(p, y, x, excl);
    // the likelihood ADF matches against: sigmoid through the probit bridge
    const auto bridged = tilted_moments(p.mean, p.variance, [&](double w) {
      return std_normal_cdf(kappa * y * (excl.mean + x * w) / shrink);
    });
    // and the shrunk sigmoid itself
    const auto logistic = tilted_moments(p.mean, p.variance, [&](double w) {
      return sigmoid(y * (excl.mean + x * w) / shrink);
    });
    worst_bridge = std::max({worst_bridge, std::abs(got.mean - bridged.mean),
                             std::abs(got.variance - bridged.var)});
    // relative to the prior scale: mean in standard deviations, variance as a ratio.
    // Only where the bridge is meant to hold; deep in the tails the two
    // likelihoods decay at different rates and the moments part ways.
    const double centre = std::abs(excl.mean + x * p.mean) / shrink;
    if (centre <= 1.0 && x * x * p.variance <= 1.0)
      worst_sigmoid =
        std::max({worst_sigmoid, std::abs(got.mean - logistic.mean) / std::sqrt(p.variance),
                  std::abs(got.variance - logistic.var) / p.variance});
  }
  CHECK(worst_bridge <= 1e-9);
  CHECK(worst_sigmoid <= 3e-2);
  MESSAGE("ADF vs sigmoid-likelihood moments, worst abs diff: " << worst_sigmoid);
}

TEST_CASE("ADF learner shrinks variance and moves toward the label") {
  AdfLearner adf({});
  CHECK(adf.process({{{1, 1.0}}, 1}).p == 0.5);
  const GaussianParam p = adf.state().get_or_init(1);
  CHECK(p.mean > 0.0);
  CHECK(p.variance < 1.0);
  CHECK(adf.name() == "adf");
}

namespace {

// KL(N(m, sd^2) || N(mu0, v0)) - E log sigmoid(c0 + a w), by quadrature.
double exact_objective(double m, double sd, double mu0, double v0, double a, double c0) {
  const double kl = std::log(std::sqrt(v0) / sd) + (sd * sd + (m - mu0) * (m - mu0)) / (2 * v0) - 0.5;
  const double e = simpson(
      [&](double z) {
        const double w = m + sd * z;
        return std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI) * -softplus(-(c0 + a * w));
      },
      -10, 10, 2000);
  return kl - e;
}

// Coordinate-wise golden-section descent; slow but independent of the
// Newton iteration under test.
std::pair<double, double> brute_minimize(double mu0, double v0, double a, double c0) {
  double m = mu0, sd = std::sqrt(v0);
  auto golden = [](auto f, double lo, double hi) {
    const double g = (std::sqrt(5.0) - 1) / 2;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    for (int i = 0; i < 80; ++i) {
      if (f(c) < f(d)) hi = d; else lo = c;
      c = hi - g * (hi - lo);
      d = lo + g * (hi - lo);
    }
    return 0.5 * (lo + hi);
  };
  for (int sweep = 0; sweep < 30; ++sweep) {
    m = golden([&](double v) { return exact_objective(v, sd, mu0, v0, a, c0); }, m - 3, m + 3);
    sd = golden([&](double v) { return exact_objective(m, v, mu0, v0, a, c0); }, 1e-3, 2 * sd + 1);
  }
  return {m, sd};
}

}  // namespace

TEST_CASE("VB update minimizes the KL objective") {
  // quantile samples make the sampled objective a tight quadrature
  const int n = 4000;
  std::vector<double> samples(n);
  for (int j = 0; j < n; ++j) {
    const double u = (j + 0.5) / n;
    // invert Phi by bisection
    samples[j] = margauss::testing::bisect(
        [u](double z) { return std_normal_cdf(z) - u; }, -10, 10);
  }
  VBConfig cfg;
  cfg.n_samples = n;
  const struct {
    GaussianParam p;
    int y;
    double x;
    ExcludedPrior excl;
  } cases[] = {
      {{0.0, 1.0}, 1, 1.0, {}},
      {{0.5, 0.3}, -1, 1.5, {0.4, 2.0}},
      {{-1.0, 2.0}, 1, -0.7, {-0.3, 0.5}},
  };
  for (const auto& c : cases) {
    const VBFeatureResult r = vb_feature_update(c.p, c.y, c.x, c.excl, samples, cfg);
    CHECK(r.converged);
    const double shrink = logistic_shrink(c.excl);
    const auto [m, sd] =
        brute_minimize(c.p.mean, c.p.variance, c.y * c.x / shrink, c.y * c.excl.mean / shrink);
    CHECK(std::abs(r.param.mean - m) < 1e-3);
    CHECK(std::abs(std::sqrt(r.param.variance) - sd) < 1e-3);
  }
}

TEST_CASE("VB edge cases") {
  VBConfig cfg;
  std::vector<double> samples{-1.0, 0.0, 1.0};
  const GaussianParam p{0.2, 0.5};
  const VBFeatureResult r = vb_feature_update(p, 1, 0.0, {}, samples, cfg);
  CHECK(r.param.mean == p.mean);
  CHECK(r.param.variance == p.variance);
  cfg.n_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.newton_max_iters = 0;
  CHECK_THROWS_AS(VariationalLearner({}, cfg), std::invalid_argument);
}

TEST_CASE("VB learner is reproducible for a fixed seed") {
  VBConfig cfg;
  cfg.n_samples = 50;
  cfg.rng_seed = 99;
  VariationalLearner a({}, cfg), b({}, cfg);
  CHECK(a.name() == "vb-50");
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    SparseExample ex;
    ex.label = rng() % 2 ? 1 : -1;
    for (FeatureId id = 0; id < 5; ++id)
      if (rng() % 2) ex.features.push_back({id, 1.0});
    CHECK(a.process(ex).p == b.process(ex).p);
  }
  for (FeatureId id = 0; id < 5; ++id) {
    CHECK(a.state().get_or_init(id).mean == b.state().get_or_init(id).mean);
    CHECK(a.state().get_or_init(id).variance < 1.0);
  }
}

TEST_CASE("SGD with AdaGrad, hand example") {
  SgdConfig cfg;
  cfg.learning_rate = 0.1;
  SgdState state;
  const Prediction p = sgd_adagrad_update(state, {{{7, 1.0}}, 1}, cfg);
  CHECK(p.p == 0.5);
  // g = -0.5, G = 0.25: w = 0.1 * 0.5 / sqrt(0.25 + 1e-6)
  CHECK(state.weights.at(7) == doctest::Approx(0.1 * 0.5 / std::sqrt(0.25 + 1e-6)).epsilon(1e-15));
  CHECK(state.accumulators.at(7) == 0.25);
}

TEST_CASE("SGD accumulators never decrease") {
  SgdConfig cfg;
  cfg.l2 = 1e-3;
  SgdAdagrad sgd(cfg);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> xs(-2, 2);
  std::vector<double> prev(4, 0.0);
  for (int t = 0; t < 2000; ++t) {
    SparseExample ex;
    ex.label = rng() % 2 ? 1 : -1;
    for (FeatureId id = 0; id < 4; ++id)
      if (rng() % 2) ex.features.push_back({id, xs(rng)});
    sgd.process(ex);
    for (FeatureId id = 0; id < 4; ++id) {
      auto it = sgd.state().accumulators.find(id);
      const double acc = it == sgd.state().accumulators.end() ? 0.0 : it->second;
      CHECK(acc >= prev[id]);
      prev[id] = acc;
    }
  }
}

TEST_CASE("SGD config validation") {
  SgdConfig cfg;
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(SgdAdagrad{cfg}, std::invalid_argument);
  cfg = {};
  cfg.l2 = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.adagrad_epsilon = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
