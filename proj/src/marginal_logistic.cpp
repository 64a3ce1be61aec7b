#include "margauss/marginal_logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace margauss {

namespace {

// The peak-matching exponent is (delta mu)^2 / (2 sigma^2); capped before exp().
constexpr double kMaxPeakExponent = 50.0;

}  // namespace

void LogisticUpdateConfig::validate() const {
  if (!(newton_tol > 0.0))
    throw std::invalid_argument("newton_tol must be positive");
  if (newton_max_iters < 1)
    throw std::invalid_argument("newton_max_iters must be at least 1");
}

double logistic_shrink(const ExcludedPrior& excl) {
  return std::sqrt(1.0 + kPiOver8 * excl.variance);
}

double p_at(int y, double x, double mean_i, const ExcludedPrior& excl) {
  return sigmoid(y * (excl.mean + x * mean_i) / logistic_shrink(excl));
}

double newton_hessian(const GaussianParam& param, int y, double x,
                      const ExcludedPrior& excl, double mean_i) {
  const double p = p_at(y, x, mean_i, excl);
  const double s2 = 1.0 + kPiOver8 * excl.variance;
  return 1.0 / param.variance + x * x * p * (1.0 - p) / s2;
}

MeanUpdate mean_update_newton(const GaussianParam& param, int y, double x,
                              const ExcludedPrior& excl,
                              const LogisticUpdateConfig& cfg) {
  const double mu = param.mean;
  const double var = param.variance;
  if (x == 0.0 || var == 0.0) return {mu, 0, true};

  const double shrink = logistic_shrink(excl);
  const double yx_s = y * x / shrink;
  const double x2_s2 = x * x / (shrink * shrink);

  // The root lies between mu and mu + y x var / shrink since 1 - p in (0, 1).
  double lo = std::min(mu, mu + yx_s * var);
  double hi = std::max(mu, mu + yx_s * var);

  double m = mu;
  double last_g = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.newton_max_iters; ++it) {
    const double p = sigmoid(y * (excl.mean + x * m) / shrink);
    const double g = (m - mu) / var - yx_s * (1.0 - p);
    const double h = 1.0 / var + x2_s2 * p * (1.0 - p);
    if (g < 0.0) lo = std::max(lo, m);
    if (g > 0.0) hi = std::min(hi, m);
    double next = m - g / h;
    const bool inside = next >= lo && next <= hi;
    if (inside && std::abs(next - m) < cfg.newton_tol) return {next, it, true};
    // bisect when Newton leaves the bracket or stops halving the gradient
    if (!inside || std::abs(g) > 0.5 * last_g) next = 0.5 * (lo + hi);
    last_g = std::abs(g);
    if (std::abs(next - m) < cfg.newton_tol) return {next, it, true};
    m = next;
  }
  return {m, cfg.newton_max_iters, false};
}

double mean_update_taylor(const GaussianParam& param, int y, double x,
                          const ExcludedPrior& excl) {
  const double var = param.variance;
  if (x == 0.0 || var == 0.0) return param.mean;
  const double s2 = 1.0 + kPiOver8 * excl.variance;
  const double shrink = std::sqrt(s2);
  const double p = p_at(y, x, param.mean, excl);
  const double num = y * x * var * (1.0 - p);
  const double den = shrink * (1.0 + x * x * var * (1.0 - p) * p / s2);
  return param.mean + num / den;
}

double var_update_peak(const GaussianParam& param, double new_mean, double p_t,
                       double p_plus) {
  const double delta = new_mean - param.mean;
  const double arg =
      std::min(delta * delta / (2.0 * param.variance), kMaxPeakExponent);
  const double sigma = p_t * std::sqrt(param.variance) / p_plus * std::exp(arg);
  return sigma * sigma;
}

double var_update_laplace(const GaussianParam& param, int y, double x,
                          const ExcludedPrior& excl, double p_plus) {
  (void)y;  // enters squared
  if (x == 0.0) return param.variance;
  const double s2 = 1.0 + kPiOver8 * excl.variance;
  return 1.0 / (1.0 / param.variance + x * x * p_plus * (1.0 - p_plus) / s2);
}

Prediction predict(const ModelState& model, const SparseExample& ex) {
  const ExampleStats stats = example_stats(model, ex);
  return shrunk_prediction(ex.label, stats.mu_t, stats.sigma_sq_t,
                           Likelihood::logistic);
}

MarginalLogistic::MarginalLogistic(PriorConfig prior, LogisticUpdateConfig cfg)
    : model_(prior), cfg_(cfg) {
  cfg_.validate();
}

Prediction MarginalLogistic::predict(const SparseExample& ex) const {
  return margauss::predict(model_, ex);
}

Prediction MarginalLogistic::process(const SparseExample& ex) {
  const ExampleStats stats = example_stats(model_, ex);
  const int y = ex.label;
  const Prediction pt =
      shrunk_prediction(y, stats.mu_t, stats.sigma_sq_t, Likelihood::logistic);

  // Every feature is updated from the same pre-update snapshot; results are
  // committed only after the loop.
  const std::size_t n = ex.features.size();
  pending_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = ex.features[k].value;
    const GaussianParam& old = stats.params[k];
    const ExcludedPrior& excl = stats.excluded[k];
    if (x == 0.0) {
      pending_[k] = old;
      continue;
    }
    double mean;
    if (cfg_.mean_method == MeanMethod::newton) {
      const MeanUpdate mu = mean_update_newton(old, y, x, excl, cfg_);
      if (!mu.converged) ++warnings_;
      mean = mu.mean;
    } else {
      mean = mean_update_taylor(old, y, x, excl);
    }
    const double p_plus = p_at(y, x, mean, excl);
    const double var =
        cfg_.var_method == VarianceMethod::laplace
            ? var_update_laplace(old, y, x, excl, p_plus)
            : var_update_peak(old, mean, pt.p, p_plus);
    pending_[k] = {mean, var};
  }
  for (std::size_t k = 0; k < n; ++k)
    if (ex.features[k].value != 0.0) model_.store(ex.features[k].id, pending_[k]);
  return pt;
}

std::string MarginalLogistic::name() const {
  std::string s = cfg_.mean_method == MeanMethod::newton ? "gauss-newton"
                                                         : "gauss-taylor";
  s += cfg_.var_method == VarianceMethod::peak ? "-peak" : "-laplace";
  return s;
}

}  // namespace margauss
