#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "margauss/core.hpp"

using namespace margauss;

TEST_CASE("example_stats at the prior with one feature") {
  ModelState model;
  const ExampleStats s = example_stats(model, {{{3, 1.0}}, 1});
  CHECK(s.mu_t == 0.0);
  CHECK(s.sigma_sq_t == 1.0);
  REQUIRE(s.excluded.size() == 1);
  CHECK(s.excluded[0].mean == 0.0);
  CHECK(s.excluded[0].variance == 0.0);
}

TEST_CASE("example_stats hand-computed two-feature case") {
  ModelState model;
  model.store(1, {0.5, 0.2});
  model.store(2, {-1.0, 0.4});
  const ExampleStats s = example_stats(model, {{{1, 1.0}, {2, 0.5}}, 1});
  CHECK(s.mu_t == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(s.sigma_sq_t == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.excluded[0].mean == doctest::Approx(-0.5));
  CHECK(s.excluded[0].variance == doctest::Approx(0.1));
  CHECK(s.excluded[1].mean == doctest::Approx(0.5));
  CHECK(s.excluded[1].variance == doctest::Approx(0.2));
}

TEST_CASE("example_stats of an empty example") {
  ModelState model;
  const ExampleStats s = example_stats(model, {{}, -1});
  CHECK(s.mu_t == 0.0);
  CHECK(s.sigma_sq_t == 0.0);
  CHECK(s.excluded.empty());
}

TEST_CASE("exclusions reconstruct the totals") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3), v(1e-4, 3);
  for (int rep = 0; rep < 2000; ++rep) {
    ModelState model({0.1, 0.7, {}});
    SparseExample ex;
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int k = 0; k < n; ++k) {
      if (rng() % 3) model.store(k, {u(rng), v(rng)});
      ex.features.push_back({static_cast<FeatureId>(k), u(rng)});
    }
    const ExampleStats s = example_stats(model, ex);
    for (std::size_t k = 0; k < ex.features.size(); ++k) {
      const double x = ex.features[k].value;
      const auto& p = s.params[k];
      const double scale_m = std::max(1.0, std::abs(s.mu_t));
      CHECK(std::abs(s.excluded[k].mean + x * p.mean - s.mu_t) <= 1e-12 * scale_m * n);
      CHECK(s.excluded[k].variance >= 0.0);
      CHECK(std::abs(s.excluded[k].variance + x * x * p.variance - s.sigma_sq_t) <=
            1e-12 * std::max(1.0, s.sigma_sq_t) * n);
    }
  }
}

TEST_CASE("tiny negative excluded variance is clamped") {
  ModelState model;
  model.store(1, {0.0, 1e-300});
  model.store(2, {0.0, 1e16});
  const ExampleStats s = example_stats(model, {{{1, 1.0}, {2, 1.0}}, 1});
  CHECK(s.excluded[1].variance >= 0.0);
}

TEST_CASE("ModelState reads unseen features as the prior") {
  ModelState model({0.25, 2.0, {}});
  const GaussianParam p = model.get_or_init(123456789);
  CHECK(p.mean == 0.25);
  CHECK(p.variance == 2.0);
  CHECK_FALSE(model.contains(123456789));
  CHECK(model.size() == 0);
}

TEST_CASE("ModelState rejects invalid parameters") {
  ModelState model;
  CHECK_THROWS_AS(model.store(1, {0.0, 0.0}), NumericError);
  CHECK_THROWS_AS(model.store(1, {0.0, -1.0}), NumericError);
  CHECK_THROWS_AS(model.store(1, {std::nan(""), 1.0}), NumericError);
  CHECK_THROWS_AS(model.store(1, {0.0, std::numeric_limits<double>::infinity()}),
                  NumericError);
  CHECK(model.size() == 0);
}

TEST_CASE("prior validation") {
  CHECK_THROWS_AS(ModelState(PriorConfig{0.0, 0.0, {}}), std::invalid_argument);
  CHECK_THROWS_AS(ModelState(PriorConfig{0.0, -2.0, {}}), std::invalid_argument);
  CHECK_THROWS_AS(ModelState(PriorConfig{std::nan(""), 1.0, {}}), std::invalid_argument);
  CHECK_THROWS_AS(PriorConfig({0.0, 1.0, -1.0}).validate(), std::invalid_argument);
  CHECK_NOTHROW(PriorConfig({0.0, 1.0, 5.0}).validate());
}

TEST_CASE("example validation") {
  CHECK_THROWS_AS(validate({{{1, 1.0}}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(validate({{{1, 1.0}}, 2}), std::invalid_argument);
  CHECK_THROWS_AS(validate({{{1, std::nan("")}}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(validate({{{1, 1.0}, {1, 2.0}}, 1}), std::invalid_argument);
  SparseExample many;
  for (FeatureId i = 0; i < 100; ++i) many.features.push_back({i * 7, 1.0});
  CHECK_NOTHROW(validate(many));
  many.features.push_back({14, 1.0});
  CHECK_THROWS_AS(validate(many), std::invalid_argument);
  CHECK_NOTHROW(validate({{}, -1}));
}

TEST_CASE("label normalization") {
  CHECK(normalize_label(0) == -1);
  CHECK(normalize_label(1) == 1);
  CHECK(normalize_label(-1) == -1);
  CHECK_THROWS_AS(normalize_label(2), std::invalid_argument);
}
