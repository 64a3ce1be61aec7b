#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "margauss/learner.hpp"

namespace margauss {

// ---------------------------------------------------------------------------
// Assumed density filtering

/// Moment-matched posterior of one feature. The likelihood is the sigmoid
/// with the other active features marginalized out, replaced by its probit
/// stand-in so the first two moments have closed forms.
GaussianParam adf_feature_update(const GaussianParam& param, int y, double x,
                                 const ExcludedPrior& excl);

class AdfLearner final : public OnlineLearner {
 public:
  explicit AdfLearner(PriorConfig prior);

  Prediction predict(const SparseExample& ex) const override;
  Prediction process(const SparseExample& ex) override;
  std::string name() const override { return "adf"; }

  const ModelState& state() const { return model_; }

 private:
  ModelState model_;
  std::vector<GaussianParam> pending_;
};

// ---------------------------------------------------------------------------
// Marginalized variational Bayes

struct VBConfig {
  int n_samples = 100;
  double newton_tol = 1e-8;
  int newton_max_iters = 20;
  double sigma_min = 1e-6;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct VBFeatureResult {
  GaussianParam param;
  int iterations = 0;
  bool converged = true;
  bool used_gradient_fallback = false;
};

/// Minimizes the sampled KL divergence to the marginalized posterior of one
/// feature over (mean, stddev) jointly by Newton's method. `samples` are the
/// standard-normal draws, held fixed across iterations.
VBFeatureResult vb_feature_update(const GaussianParam& param, int y, double x,
                                  const ExcludedPrior& excl,
                                  std::span<const double> samples,
                                  const VBConfig& cfg);

class VariationalLearner final : public OnlineLearner {
 public:
  VariationalLearner(PriorConfig prior, VBConfig cfg);

  Prediction predict(const SparseExample& ex) const override;
  Prediction process(const SparseExample& ex) override;
  std::string name() const override;
  std::size_t warnings() const override { return warnings_; }

  const ModelState& state() const { return model_; }

 private:
  ModelState model_;
  VBConfig cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::vector<double> samples_;
  std::vector<GaussianParam> pending_;
  std::size_t warnings_ = 0;
};

// ---------------------------------------------------------------------------
// SGD with AdaGrad step sizes

struct SgdConfig {
  double learning_rate = 0.1;
  double l2 = 0.0;
  double adagrad_epsilon = 1e-6;

  void validate() const;
};

struct SgdState {
  std::unordered_map<FeatureId, double> weights;
  std::unordered_map<FeatureId, double> accumulators;
};

/// One progressive-validation step: returns sigmoid(y x^T w) at the current
/// weights, then applies the AdaGrad-scaled logistic gradient step.
Prediction sgd_adagrad_update(SgdState& state, const SparseExample& ex,
                              const SgdConfig& cfg);

class SgdAdagrad final : public OnlineLearner {
 public:
  explicit SgdAdagrad(SgdConfig cfg);

  Prediction predict(const SparseExample& ex) const override;
  Prediction process(const SparseExample& ex) override;
  std::string name() const override { return "sgd-adagrad"; }

  const SgdState& state() const { return state_; }

 private:
  SgdState state_;
  SgdConfig cfg_;
};

}  // namespace margauss
