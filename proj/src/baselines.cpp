#include "margauss/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "margauss/marginal_logistic.hpp"
#include "margauss/marginal_probit.hpp"

namespace margauss {

GaussianParam adf_feature_update(const GaussianParam& param, int y, double x,
                                 const ExcludedPrior& excl) {
  if (x == 0.0) return param;
  // Likelihood Phi(b w + c) with b = kappa y x / shrink, c = kappa y
  // excl.mean / shrink, kappa = sqrt(pi/8), shrink^2 = 1 + pi/8 excl.variance.
  // Against N(mean, var):
  //   z      = (c + b mean) / sqrt(1 + b^2 var)
  //   mean' = mean + var b lambda(z) / sqrt(1 + b^2 var)
  //   var'  = var - var^2 b^2 lambda(z) (z + lambda(z)) / (1 + b^2 var)
  const double kappa = std::sqrt(kPiOver8);
  const double shrink = std::sqrt(1.0 + kPiOver8 * excl.variance);
  const double b = kappa * y * x / shrink;
  const double c = kappa * y * excl.mean / shrink;
  const double var = param.variance;
  const double norm2 = 1.0 + b * b * var;
  const double norm = std::sqrt(norm2);
  const double z = (c + b * param.mean) / norm;
  const double lam = hazard(z);
  const double mean = param.mean + var * b * lam / norm;
  const double new_var = var - var * var * b * b * lam * (z + lam) / norm2;
  return {mean, new_var};
}

AdfLearner::AdfLearner(PriorConfig prior) : model_(prior) {}

Prediction AdfLearner::predict(const SparseExample& ex) const {
  return margauss::predict(model_, ex);
}

Prediction AdfLearner::process(const SparseExample& ex) {
  const ExampleStats stats = example_stats(model_, ex);
  const Prediction pt = shrunk_prediction(ex.label, stats.mu_t, stats.sigma_sq_t,
                                          Likelihood::logistic);
  const std::size_t n = ex.features.size();
  pending_.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    pending_[k] = adf_feature_update(stats.params[k], ex.label,
                                     ex.features[k].value, stats.excluded[k]);
  for (std::size_t k = 0; k < n; ++k)
    if (ex.features[k].value != 0.0) model_.store(ex.features[k].id, pending_[k]);
  return pt;
}

void VBConfig::validate() const {
  if (n_samples < 1) throw std::invalid_argument("VB needs at least 1 sample");
  if (newton_max_iters < 1)
    throw std::invalid_argument("VB newton_max_iters must be at least 1");
  if (!(newton_tol > 0.0))
    throw std::invalid_argument("VB newton_tol must be positive");
  if (!(sigma_min > 0.0))
    throw std::invalid_argument("VB sigma_min must be positive");
}

VBFeatureResult vb_feature_update(const GaussianParam& param, int y, double x,
                                  const ExcludedPrior& excl,
                                  std::span<const double> samples,
                                  const VBConfig& cfg) {
  VBFeatureResult out{param};
  if (x == 0.0 || samples.empty()) return out;

  const double shrink = std::sqrt(1.0 + kPiOver8 * excl.variance);
  const double a = y * x / shrink;
  const double c0 = y * excl.mean / shrink;
  const double prior_var = param.variance;
  const double inv_n = 1.0 / static_cast<double>(samples.size());

  double m = param.mean;
  double sd = std::sqrt(prior_var);
  out.converged = false;
  for (int it = 1; it <= cfg.newton_max_iters; ++it) {
    double s_q = 0, s_sq = 0, s_w = 0, s_sw = 0, s_ssw = 0;
    for (const double s : samples) {
      const double p = sigmoid(c0 + a * (m + s * sd));
      const double q = 1.0 - p;
      const double w = p * q;
      s_q += q;
      s_sq += s * q;
      s_w += w;
      s_sw += s * w;
      s_ssw += s * s * w;
    }
    const double g1 = (m - param.mean) / prior_var - a * inv_n * s_q;
    const double g2 = -1.0 / sd + sd / prior_var - a * inv_n * s_sq;
    const double a2n = a * a * inv_n;
    const double h11 = 1.0 / prior_var + a2n * s_w;
    const double h12 = a2n * s_sw;
    const double h22 = 1.0 / (sd * sd) + 1.0 / prior_var + a2n * s_ssw;
    const double det = h11 * h22 - h12 * h12;

    double dm, dsd;
    if (h11 > 0.0 && det > 0.0) {
      dm = (h22 * g1 - h12 * g2) / det;
      dsd = (h11 * g2 - h12 * g1) / det;
    } else {
      dm = 0.1 * g1;
      dsd = 0.1 * g2;
      out.used_gradient_fallback = true;
    }
    const double next_m = m - dm;
    double next_sd = sd - dsd;
    if (!(next_sd > cfg.sigma_min)) next_sd = std::max(cfg.sigma_min, 0.5 * sd);
    const double change = std::max(std::abs(next_m - m), std::abs(next_sd - sd));
    m = next_m;
    sd = next_sd;
    out.iterations = it;
    if (change < cfg.newton_tol) {
      out.converged = true;
      break;
    }
  }
  out.param = {m, sd * sd};
  return out;
}

VariationalLearner::VariationalLearner(PriorConfig prior, VBConfig cfg)
    : model_(prior), cfg_(cfg), rng_(cfg.rng_seed) {
  cfg_.validate();
  samples_.resize(static_cast<std::size_t>(cfg_.n_samples));
}

Prediction VariationalLearner::predict(const SparseExample& ex) const {
  return margauss::predict(model_, ex);
}

Prediction VariationalLearner::process(const SparseExample& ex) {
  const ExampleStats stats = example_stats(model_, ex);
  const Prediction pt = shrunk_prediction(ex.label, stats.mu_t, stats.sigma_sq_t,
                                          Likelihood::logistic);
  const std::size_t n = ex.features.size();
  pending_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = ex.features[k].value;
    if (x == 0.0) {
      pending_[k] = stats.params[k];
      continue;
    }
    for (double& s : samples_) s = normal_(rng_);
    const VBFeatureResult r = vb_feature_update(stats.params[k], ex.label, x,
                                                stats.excluded[k], samples_, cfg_);
    if (!r.converged) ++warnings_;
    pending_[k] = r.param;
  }
  for (std::size_t k = 0; k < n; ++k)
    if (ex.features[k].value != 0.0) model_.store(ex.features[k].id, pending_[k]);
  return pt;
}

std::string VariationalLearner::name() const {
  return "vb-" + std::to_string(cfg_.n_samples);
}

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("learning rate must be positive");
  if (l2 < 0.0) throw std::invalid_argument("l2 must be non-negative");
  if (!(adagrad_epsilon > 0.0))
    throw std::invalid_argument("adagrad epsilon must be positive");
}

namespace {

double sgd_score(const SgdState& state, const SparseExample& ex) {
  double score = 0.0;
  for (const auto& f : ex.features) {
    auto it = state.weights.find(f.id);
    if (it != state.weights.end()) score += f.value * it->second;
  }
  return score;
}

}  // namespace

Prediction sgd_adagrad_update(SgdState& state, const SparseExample& ex,
                              const SgdConfig& cfg) {
  validate(ex);
  const int y = ex.label;
  const double p = sigmoid(y * sgd_score(state, ex));
  const double residual = 1.0 - p;
  for (const auto& f : ex.features) {
    if (f.value == 0.0) continue;
    double& w = state.weights[f.id];
    double& acc = state.accumulators[f.id];
    const double g = -y * f.value * residual + cfg.l2 * w;
    acc += g * g;
    w -= cfg.learning_rate * g / std::sqrt(acc + cfg.adagrad_epsilon);
  }
  return {p};
}

SgdAdagrad::SgdAdagrad(SgdConfig cfg) : cfg_(cfg) { cfg_.validate(); }

Prediction SgdAdagrad::predict(const SparseExample& ex) const {
  validate(ex);
  return {sigmoid(ex.label * sgd_score(state_, ex))};
}

Prediction SgdAdagrad::process(const SparseExample& ex) {
  return sgd_adagrad_update(state_, ex, cfg_);
}

}  // namespace margauss
