#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "margauss/approx_math.hpp"
#include "margauss/learner.hpp"
#include "margauss/marginal_logistic.hpp"

namespace margauss {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class MultiMode { covariance, precision };

struct MultiUpdateConfig {
  MeanMethod method = MeanMethod::taylor;
  MultiMode mode = MultiMode::covariance;
  double newton_tol = 1e-10;
  int newton_max_iters = 50;

  void validate() const;
};

/// The d_t active coordinates of one example: ids, values, means and the
/// (scratch) covariance restricted to them.
template <typename Scalar = double>
struct ActiveSlice {
  std::vector<FeatureId> ids;
  Vec<Scalar> x;
  Vec<Scalar> u;
  Mat<Scalar> sigma;
};

template <typename Scalar = double>
struct MultiUpdate {
  Vec<Scalar> u;
  Mat<Scalar> sigma;  // covariance, or precision in precision mode
  int iterations = 0;
  bool converged = true;
};

/// Throws std::domain_error unless `m` is symmetric positive definite.
template <typename Derived>
void require_spd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols())
    throw std::domain_error("matrix is not square");
  const Scalar scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() >
      Scalar(1e-10) * (scale > Scalar(1) ? scale : Scalar(1)))
    throw std::domain_error("matrix is not symmetric");
  Eigen::LLT<Mat<Scalar>> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("matrix is not positive definite");
}

/// (Sigma^-1 + alpha x x^T)^-1 by Sherman-Morrison:
///   Sigma - alpha (Sigma x)(Sigma x)^T / (1 + alpha x^T Sigma x).
/// The result is symmetrized.
template <typename DerivedS, typename DerivedX>
Mat<typename DerivedS::Scalar> sherman_morrison_downdate(
    const Eigen::MatrixBase<DerivedS>& sigma,
    const Eigen::MatrixBase<DerivedX>& x, typename DerivedS::Scalar alpha) {
  using Scalar = typename DerivedS::Scalar;
  if (alpha < Scalar(0))
    throw std::domain_error("sherman_morrison_downdate: negative alpha");
  require_spd(sigma);
  const Vec<Scalar> v = sigma * x;
  const Scalar denom = Scalar(1) + alpha * x.dot(v);
  Mat<Scalar> out = sigma - (alpha / denom) * v * v.transpose();
  return (out + out.transpose()) / Scalar(2);
}

/// Same downdate for a diagonal Sigma given by its diagonal; returns only the
/// diagonal of the result. O(d_t).
template <typename DerivedD, typename DerivedX>
Vec<typename DerivedD::Scalar> sherman_morrison_diagonal(
    const Eigen::MatrixBase<DerivedD>& diag,
    const Eigen::MatrixBase<DerivedX>& x, typename DerivedD::Scalar alpha) {
  using Scalar = typename DerivedD::Scalar;
  const Vec<Scalar> v = diag.cwiseProduct(x);
  const Scalar c = alpha / (Scalar(1) + alpha * x.dot(v));
  return diag - c * v.cwiseAbs2();
}

namespace detail {

// Newton on the joint Laplace mode. The gradient and Hessian inverse are
// expressed through v = Sigma x and the Sherman-Morrison scalar
// c = alpha / (1 + alpha x^T v):
//   H^-1 = Sigma - c v v^T,  H^-1 Sigma^-1 d = d - c v (x^T d),
//   H^-1 x = v (1 - c q),    q = x^T v.
// Iterates stay on the line u + s v, which gives a bracket for safeguarding.
template <typename Scalar>
struct LineNewton {
  Scalar s = 0;
  int iterations = 0;
  bool converged = true;
};

template <typename Scalar>
LineNewton<Scalar> solve_mode_along(Scalar m, Scalar q, int y,
                                    const MultiUpdateConfig& cfg) {
  LineNewton<Scalar> out;
  if (q == Scalar(0)) return out;
  Scalar lo = y > 0 ? Scalar(0) : Scalar(-1);
  Scalar hi = y > 0 ? Scalar(1) : Scalar(0);
  Scalar s = 0;
  Scalar last_f = std::numeric_limits<Scalar>::infinity();
  for (int it = 1; it <= cfg.newton_max_iters; ++it) {
    const Scalar p = sigmoid(y * (m + s * q));
    const Scalar alpha = p * (Scalar(1) - p);
    const Scalar c = alpha / (Scalar(1) + alpha * q);
    // H^-1 g restricted to the line, in units of v
    const Scalar f = s - y * (Scalar(1) - p);
    if (f < 0) lo = s > lo ? s : lo;
    if (f > 0) hi = s < hi ? s : hi;
    Scalar next = s - (Scalar(1) - c * q) * f;
    const bool inside = next >= lo && next <= hi;
    // bisect when Newton leaves the bracket or stops halving the residual
    if (!(inside && std::abs(next - s) < cfg.newton_tol) &&
        (!inside || std::abs(f) > last_f / Scalar(2)))
      next = (lo + hi) / Scalar(2);
    last_f = std::abs(f);
    if (std::abs(next - s) < cfg.newton_tol) {
      out.s = next;
      out.iterations = it;
      return out;
    }
    s = next;
  }
  out.s = s;
  out.iterations = cfg.newton_max_iters;
  out.converged = false;
  return out;
}

}  // namespace detail

/// Joint Laplace update of all active coordinates by Newton iteration.
/// Returns the converged mean and the covariance from the inverted Hessian.
template <typename Scalar>
MultiUpdate<Scalar> update_newton_multi(const ActiveSlice<Scalar>& slice, int y,
                                        const MultiUpdateConfig& cfg) {
  const Vec<Scalar> v = slice.sigma * slice.x;
  const Scalar q = slice.x.dot(v);
  const Scalar m = slice.x.dot(slice.u);
  const auto line = detail::solve_mode_along<Scalar>(m, q, y, cfg);

  MultiUpdate<Scalar> out;
  out.u = slice.u + line.s * v;
  const Scalar p_plus = sigmoid(y * slice.x.dot(out.u));
  const Scalar alpha = p_plus * (Scalar(1) - p_plus);
  const Scalar c = alpha / (Scalar(1) + alpha * q);
  out.sigma = slice.sigma - c * v * v.transpose();
  out.sigma = (out.sigma + out.sigma.transpose()) / Scalar(2);
  out.iterations = line.iterations;
  out.converged = line.converged;
  return out;
}

/// Single-pass linearized update: temporary downdate at the un-shrunk
/// prediction, mean step, then the final downdate at the updated prediction.
template <typename Scalar>
MultiUpdate<Scalar> update_taylor_multi(const ActiveSlice<Scalar>& slice,
                                        int y) {
  const Vec<Scalar> v = slice.sigma * slice.x;
  const Scalar q = slice.x.dot(v);
  const Scalar p_tilde = sigmoid(y * slice.x.dot(slice.u));
  const Scalar a_tilde = p_tilde * (Scalar(1) - p_tilde);
  const Scalar c_tilde = a_tilde / (Scalar(1) + a_tilde * q);

  MultiUpdate<Scalar> out;
  // Sigma_tilde x = v - c v q
  out.u = slice.u + (y * (Scalar(1) - p_tilde) * (Scalar(1) - c_tilde * q)) * v;
  const Scalar p_plus = sigmoid(y * slice.x.dot(out.u));
  const Scalar a_plus = p_plus * (Scalar(1) - p_plus);
  const Scalar c_plus = a_plus / (Scalar(1) + a_plus * q);
  out.sigma = slice.sigma - c_plus * v * v.transpose();
  out.sigma = (out.sigma + out.sigma.transpose()) / Scalar(2);
  out.iterations = 1;
  return out;
}

/// Precision-matrix form. `precision` is the prior H; the returned `sigma`
/// field holds the posterior precision H + alpha x x^T. The mean step solves
/// against the temporary precision instead of using Sherman-Morrison.
template <typename Scalar>
MultiUpdate<Scalar> update_precision_mode(const Vec<Scalar>& u,
                                          const Mat<Scalar>& precision,
                                          const Vec<Scalar>& x, int y,
                                          const MultiUpdateConfig& cfg) {
  const Mat<Scalar> xxT = x * x.transpose();
  MultiUpdate<Scalar> out;
  if (cfg.method == MeanMethod::taylor) {
    const Scalar p_tilde = sigmoid(y * x.dot(u));
    const Mat<Scalar> h_tilde = precision + p_tilde * (Scalar(1) - p_tilde) * xxT;
    const Vec<Scalar> step = h_tilde.ldlt().solve(x);
    out.u = u + (y * (Scalar(1) - p_tilde)) * step;
    out.iterations = 1;
  } else {
    // the mode lies on u + s H^-1 x; same safeguarded line search
    const Vec<Scalar> v = precision.ldlt().solve(x);
    const auto line = detail::solve_mode_along<Scalar>(x.dot(u), x.dot(v), y, cfg);
    out.u = u + line.s * v;
    out.iterations = line.iterations;
    out.converged = line.converged;
  }
  const Scalar p_plus = sigmoid(y * x.dot(out.u));
  out.sigma = precision + p_plus * (Scalar(1) - p_plus) * xxT;
  return out;
}

/// Sparse joint-update learner. Each example gathers a diagonal covariance
/// from the stored per-feature variances, updates jointly, and scatters the
/// diagonal back; off-diagonal terms are dropped.
class MultiDimGauss final : public OnlineLearner {
 public:
  MultiDimGauss(PriorConfig prior, MultiUpdateConfig cfg);

  Prediction predict(const SparseExample& ex) const override;
  Prediction process(const SparseExample& ex) override;
  std::string name() const override;
  std::size_t warnings() const override { return warnings_; }

  const ModelState& state() const { return model_; }

 private:
  ModelState model_;
  MultiUpdateConfig cfg_;
  std::size_t warnings_ = 0;
};

/// Joint-update learner that keeps the full d x d covariance. Feature ids
/// must lie in [0, dim). Intended for small dense problems.
class DenseDimGauss final : public OnlineLearner {
 public:
  static constexpr std::size_t kMaxDim = 1000;

  DenseDimGauss(std::size_t dim, PriorConfig prior, MultiUpdateConfig cfg);

  Prediction predict(const SparseExample& ex) const override;
  Prediction process(const SparseExample& ex) override;
  std::string name() const override;
  std::size_t warnings() const override { return warnings_; }

  const Vec<double>& mean() const { return u_; }
  const Mat<double>& covariance() const { return sigma_; }

 private:
  void check_ids(const SparseExample& ex) const;

  Vec<double> u_;
  Mat<double> sigma_;
  MultiUpdateConfig cfg_;
  std::size_t warnings_ = 0;
};

}  // namespace margauss
