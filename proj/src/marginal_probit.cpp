#include "margauss/marginal_probit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace margauss {

namespace {

// Below this, phi and erfc are both close to underflow; switch to the series.
constexpr double kHazardAsymptoticBelow = -30.0;

}  // namespace

double hazard(double z) {
  if (z >= kHazardAsymptoticBelow) return std_normal_pdf(z) / std_normal_cdf(z);
  // Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8 - 945/z^10)
  const double r = 1.0 / (z * z);
  const double series =
      1.0 - r * (1.0 - r * (3.0 - r * (15.0 - r * (105.0 - r * 945.0))));
  return -z / series;
}

double probit_shrink(const ExcludedPrior& excl) {
  return std::sqrt(1.0 + excl.variance);
}

double probit_score(int y, double x, double mean_i, const ExcludedPrior& excl) {
  return y * (excl.mean + x * mean_i) / probit_shrink(excl);
}

Prediction probit_predict(const ModelState& model, const SparseExample& ex) {
  const ExampleStats stats = example_stats(model, ex);
  return shrunk_prediction(ex.label, stats.mu_t, stats.sigma_sq_t,
                           Likelihood::probit);
}

MeanUpdate mean_update_newton_probit(const GaussianParam& param, int y,
                                     double x, const ExcludedPrior& excl,
                                     const LogisticUpdateConfig& cfg) {
  const double mu = param.mean;
  const double var = param.variance;
  if (x == 0.0 || var == 0.0) return {mu, 0, true};

  const double shrink = probit_shrink(excl);
  const double yx_s = y * x / shrink;
  const double x2_s2 = x * x / (shrink * shrink);

  // hazard is decreasing in z, so the step from mu bounds the root.
  const double reach = yx_s * var * hazard(probit_score(y, x, mu, excl));
  double lo = std::min(mu, mu + reach);
  double hi = std::max(mu, mu + reach);

  double m = mu;
  double last_g = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.newton_max_iters; ++it) {
    const double z = y * (excl.mean + x * m) / shrink;
    const double lam = hazard(z);
    const double g = (m - mu) / var - yx_s * lam;
    const double h = 1.0 / var + x2_s2 * lam * (z + lam);
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

double mean_update_taylor_probit(const GaussianParam& param, int y, double x,
                                 const ExcludedPrior& excl) {
  const double var = param.variance;
  if (x == 0.0 || var == 0.0) return param.mean;
  const double s2 = 1.0 + excl.variance;
  const double z = probit_score(y, x, param.mean, excl);
  const double lam = hazard(z);
  const double num = y * x * var * lam;
  const double den = std::sqrt(s2) * (1.0 + x * x * var * lam * (z + lam) / s2);
  return param.mean + num / den;
}

double var_update_laplace_probit(const GaussianParam& param, int y, double x,
                                 const ExcludedPrior& excl, double z_plus) {
  (void)y;
  if (x == 0.0) return param.variance;
  const double lam = hazard(z_plus);
  const double s2 = 1.0 + excl.variance;
  return 1.0 / (1.0 / param.variance + x * x * lam * (z_plus + lam) / s2);
}

MarginalProbit::MarginalProbit(PriorConfig prior, LogisticUpdateConfig cfg)
    : model_(prior), cfg_(cfg) {
  cfg_.validate();
}

Prediction MarginalProbit::predict(const SparseExample& ex) const {
  return probit_predict(model_, ex);
}

Prediction MarginalProbit::process(const SparseExample& ex) {
  const ExampleStats stats = example_stats(model_, ex);
  const int y = ex.label;
  const Prediction pt =
      shrunk_prediction(y, stats.mu_t, stats.sigma_sq_t, Likelihood::probit);

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
      const MeanUpdate mu = mean_update_newton_probit(old, y, x, excl, cfg_);
      if (!mu.converged) ++warnings_;
      mean = mu.mean;
    } else {
      mean = mean_update_taylor_probit(old, y, x, excl);
    }
    const double z_plus = probit_score(y, x, mean, excl);
    pending_[k] = {mean, var_update_laplace_probit(old, y, x, excl, z_plus)};
  }
  for (std::size_t k = 0; k < n; ++k)
    if (ex.features[k].value != 0.0) model_.store(ex.features[k].id, pending_[k]);
  return pt;
}

std::string MarginalProbit::name() const {
  return cfg_.mean_method == MeanMethod::newton ? "probit-newton"
                                                : "probit-taylor";
}

}  // namespace margauss
