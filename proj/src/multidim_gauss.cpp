#include "margauss/multidim_gauss.hpp"

#include <algorithm>

namespace margauss {

void MultiUpdateConfig::validate() const {
  if (!(newton_tol > 0.0))
    throw std::invalid_argument("newton_tol must be positive");
  if (newton_max_iters < 1)
    throw std::invalid_argument("newton_max_iters must be at least 1");
}

MultiDimGauss::MultiDimGauss(PriorConfig prior, MultiUpdateConfig cfg)
    : model_(prior), cfg_(cfg) {
  cfg_.validate();
}

Prediction MultiDimGauss::predict(const SparseExample& ex) const {
  return margauss::predict(model_, ex);
}

Prediction MultiDimGauss::process(const SparseExample& ex) {
  validate(ex);
  const int y = ex.label;
  const auto n = static_cast<Eigen::Index>(ex.features.size());
  Vec<double> x(n), u(n), diag(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& f = ex.features[static_cast<std::size_t>(k)];
    const GaussianParam p = model_.get_or_init(f.id);
    x[k] = f.value;
    u[k] = p.mean;
    diag[k] = p.variance;
  }
  const Vec<double> v = diag.cwiseProduct(x);
  const double q = x.dot(v);
  const double m = x.dot(u);
  const Prediction pt = shrunk_prediction(y, m, q, Likelihood::logistic);
  if (n == 0) return pt;

  Vec<double> new_u, new_diag;
  if (cfg_.mode == MultiMode::precision) {
    const Mat<double> h = diag.cwiseInverse().asDiagonal();
    const MultiUpdate<double> up = update_precision_mode<double>(u, h, x, y, cfg_);
    if (!up.converged) ++warnings_;
    new_u = up.u;
    const Mat<double> cov =
        up.sigma.ldlt().solve(Mat<double>::Identity(n, n));
    new_diag = cov.diagonal();
  } else {
    double s;
    if (cfg_.method == MeanMethod::newton) {
      const auto line = detail::solve_mode_along<double>(m, q, y, cfg_);
      if (!line.converged) ++warnings_;
      s = line.s;
    } else {
      const double p_tilde = sigmoid(y * m);
      const double a = p_tilde * (1.0 - p_tilde);
      s = y * (1.0 - p_tilde) * (1.0 - a * q / (1.0 + a * q));
    }
    new_u = u + s * v;
    const double p_plus = sigmoid(y * x.dot(new_u));
    new_diag = sherman_morrison_diagonal(diag, x, p_plus * (1.0 - p_plus));
  }

  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& f = ex.features[static_cast<std::size_t>(k)];
    if (f.value == 0.0) continue;
    model_.store(f.id, {new_u[k], new_diag[k]});
  }
  return pt;
}

std::string MultiDimGauss::name() const {
  std::string s = cfg_.method == MeanMethod::newton ? "dimgauss-newton"
                                                    : "dimgauss-taylor";
  if (cfg_.mode == MultiMode::precision) s += "-precision";
  return s;
}

DenseDimGauss::DenseDimGauss(std::size_t dim, PriorConfig prior,
                             MultiUpdateConfig cfg)
    : cfg_(cfg) {
  prior.validate();
  cfg_.validate();
  if (dim == 0 || dim > kMaxDim)
    throw std::invalid_argument("dense joint covariance needs 1 <= d <= " +
                                std::to_string(kMaxDim));
  const auto d = static_cast<Eigen::Index>(dim);
  u_ = Vec<double>::Constant(d, prior.mu0);
  sigma_ = Mat<double>::Identity(d, d) * prior.sigma0_sq;
}

void DenseDimGauss::check_ids(const SparseExample& ex) const {
  validate(ex);
  for (const auto& f : ex.features)
    if (f.id >= static_cast<FeatureId>(u_.size()))
      throw std::invalid_argument("feature id out of range for dense model");
}

Prediction DenseDimGauss::predict(const SparseExample& ex) const {
  check_ids(ex);
  double m = 0.0, q = 0.0;
  for (const auto& a : ex.features) {
    m += a.value * u_[static_cast<Eigen::Index>(a.id)];
    for (const auto& b : ex.features)
      q += a.value * b.value *
           sigma_(static_cast<Eigen::Index>(a.id), static_cast<Eigen::Index>(b.id));
  }
  return shrunk_prediction(ex.label, m, std::max(0.0, q), Likelihood::logistic);
}

Prediction DenseDimGauss::process(const SparseExample& ex) {
  const Prediction pt = predict(ex);
  if (ex.features.empty()) return pt;
  const int y = ex.label;

  Vec<double> v = Vec<double>::Zero(u_.size());
  double m = 0.0;
  for (const auto& f : ex.features) {
    const auto i = static_cast<Eigen::Index>(f.id);
    v += f.value * sigma_.col(i);
    m += f.value * u_[i];
  }
  double q = 0.0;
  for (const auto& f : ex.features)
    q += f.value * v[static_cast<Eigen::Index>(f.id)];

  double s;
  if (cfg_.method == MeanMethod::newton) {
    const auto line = detail::solve_mode_along<double>(m, q, y, cfg_);
    if (!line.converged) ++warnings_;
    s = line.s;
  } else {
    const double p_tilde = sigmoid(y * m);
    const double a = p_tilde * (1.0 - p_tilde);
    s = y * (1.0 - p_tilde) / (1.0 + a * q);
  }
  u_ += s * v;
  const double p_plus = sigmoid(y * (m + s * q));
  const double a = p_plus * (1.0 - p_plus);
  const double c = a / (1.0 + a * q);
  sigma_.noalias() -= (c * v) * v.transpose();
  sigma_ = (0.5 * (sigma_ + sigma_.transpose())).eval();
  return pt;
}

std::string DenseDimGauss::name() const {
  return cfg_.method == MeanMethod::newton ? "dimgauss-dense-newton"
                                           : "dimgauss-dense-taylor";
}

}  // namespace margauss
