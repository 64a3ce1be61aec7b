#pragma once

#include "margauss/learner.hpp"

namespace margauss {

enum class MeanMethod { newton, taylor };
enum class VarianceMethod { peak, laplace };

struct LogisticUpdateConfig {
  MeanMethod mean_method = MeanMethod::newton;
  VarianceMethod var_method = VarianceMethod::laplace;
  double newton_tol = 1e-10;
  int newton_max_iters = 50;

  void validate() const;
};

/// Result of an iterative mean update. `converged` is false when the
/// iteration cap was hit; the last iterate is still returned.
struct MeanUpdate {
  double mean = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Quantities shared by the mean and variance updates of one feature.
struct FeatureUpdateScratch {
  double p_base = 0.5;  // label probability at the old mean
  double p_plus = 0.5;  // label probability at the new mean
  double shrink = 1.0;  // sqrt(1 + pi/8 * excluded variance)
};

/// sqrt(1 + pi/8 * excl.variance).
double logistic_shrink(const ExcludedPrior& excl);

/// Probability of y with feature i at weight `mean_i` and the rest
/// marginalized: sigmoid(y (excl.mean + x mean_i) / shrink).
double p_at(int y, double x, double mean_i, const ExcludedPrior& excl);

/// p_at() evaluated at the pre-update mean.
inline double p_base(int y, double x, double mean_i, const ExcludedPrior& excl) {
  return p_at(y, x, mean_i, excl);
}

/// Solves mu' = mu + y x sigma^2 (1 - p_at(mu')) / shrink by safeguarded
/// Newton iteration started at mu.
MeanUpdate mean_update_newton(const GaussianParam& param, int y, double x,
                              const ExcludedPrior& excl,
                              const LogisticUpdateConfig& cfg);

/// One-shot linearization of the fixed point around the old mean.
double mean_update_taylor(const GaussianParam& param, int y, double x,
                          const ExcludedPrior& excl);

/// Peak-height matching; p_t is the shrunk prediction for the example and
/// p_plus the marginal probability at new_mean.
double var_update_peak(const GaussianParam& param, double new_mean, double p_t,
                       double p_plus);

/// Curvature (Laplace) matching at the new mean.
double var_update_laplace(const GaussianParam& param, int y, double x,
                          const ExcludedPrior& excl, double p_plus);

/// Second derivative of the negative log marginal posterior at `mean_i`.
double newton_hessian(const GaussianParam& param, int y, double x,
                      const ExcludedPrior& excl, double mean_i);

/// Marginalized per-feature Gaussian learner for logistic regression.
class MarginalLogistic final : public OnlineLearner {
 public:
  MarginalLogistic(PriorConfig prior, LogisticUpdateConfig cfg);

  Prediction predict(const SparseExample& ex) const override;
  Prediction process(const SparseExample& ex) override;
  std::string name() const override;
  std::size_t warnings() const override { return warnings_; }

  const ModelState& state() const { return model_; }
  ModelState& state() { return model_; }
  const LogisticUpdateConfig& config() const { return cfg_; }

 private:
  ModelState model_;
  LogisticUpdateConfig cfg_;
  std::size_t warnings_ = 0;
  std::vector<GaussianParam> pending_;
};

/// Prediction for ex.label from a model: the shrunk logistic mixture.
Prediction predict(const ModelState& model, const SparseExample& ex);

}  // namespace margauss
