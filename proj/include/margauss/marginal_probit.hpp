#pragma once

#include "margauss/learner.hpp"
#include "margauss/marginal_logistic.hpp"

namespace margauss {

/// Probit scores of one feature before and after its mean moves.
struct ProbitScores {
  double z_base = 0.0;
  double z_plus = 0.0;
};

/// Inverse Mills ratio phi(z) / Phi(z). Stable across the whole real line:
/// direct ratio while erfc keeps relative precision, asymptotic series in the
/// far left tail.
double hazard(double z);

/// sqrt(1 + excl.variance).
double probit_shrink(const ExcludedPrior& excl);

/// y (excl.mean + x mean_i) / sqrt(1 + excl.variance).
double probit_score(int y, double x, double mean_i, const ExcludedPrior& excl);

Prediction probit_predict(const ModelState& model, const SparseExample& ex);

MeanUpdate mean_update_newton_probit(const GaussianParam& param, int y,
                                     double x, const ExcludedPrior& excl,
                                     const LogisticUpdateConfig& cfg);

double mean_update_taylor_probit(const GaussianParam& param, int y, double x,
                                 const ExcludedPrior& excl);

double var_update_laplace_probit(const GaussianParam& param, int y, double x,
                                 const ExcludedPrior& excl, double z_plus);

/// Marginalized per-feature Gaussian learner for probit regression. Variance
/// updates are always curvature matched; cfg.var_method is ignored.
class MarginalProbit final : public OnlineLearner {
 public:
  MarginalProbit(PriorConfig prior, LogisticUpdateConfig cfg);

  Prediction predict(const SparseExample& ex) const override;
  Prediction process(const SparseExample& ex) override;
  std::string name() const override;
  std::size_t warnings() const override { return warnings_; }

  const ModelState& state() const { return model_; }

 private:
  ModelState model_;
  LogisticUpdateConfig cfg_;
  std::size_t warnings_ = 0;
  std::vector<GaussianParam> pending_;
};

}  // namespace margauss
