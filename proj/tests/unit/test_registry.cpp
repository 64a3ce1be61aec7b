#include <doctest.h>

#include "margauss/registry.hpp"

using namespace margauss;

TEST_CASE("every listed algorithm id builds") {
  for (std::string id : known_algorithm_ids()) {
    if (id == "vb-{N}") id = "vb-10";
    AlgorithmSpec spec;
    spec.id = id;
    spec.dense_dim = 8;
    auto learner = make_learner(spec);
    REQUIRE(learner);
    CHECK(learner->name() == id);
    CHECK(learner->process({{{1, 1.0}}, 1}).p == doctest::Approx(0.5));
  }
}

TEST_CASE("bad ids and parameters are rejected") {
  for (const char* id : {"gauss", "gauss-newton", "gauss-newton-wide", "gauss-fast-laplace",
                         "vb-", "vb-0", "vb-x", "vb-10x", "probit", "nope"}) {
    AlgorithmSpec spec;
    spec.id = id;
    CHECK_THROWS_AS(make_learner(spec), std::invalid_argument);
  }
  AlgorithmSpec spec;
  spec.prior.sigma0_sq = 0.0;
  CHECK_THROWS_AS(make_learner(spec), std::invalid_argument);
  spec = {};
  spec.id = "dimgauss-dense-taylor";  // needs a dimension
  CHECK_THROWS_AS(make_learner(spec), std::invalid_argument);
  spec = {};
  spec.id = "sgd-adagrad";
  spec.sgd.learning_rate = -1;
  CHECK_THROWS_AS(make_learner(spec), std::invalid_argument);
}

TEST_CASE("only sampling learners are stochastic") {
  CHECK(is_stochastic("vb-100"));
  CHECK_FALSE(is_stochastic("gauss-taylor-laplace"));
  CHECK_FALSE(is_stochastic("sgd-adagrad"));
}
