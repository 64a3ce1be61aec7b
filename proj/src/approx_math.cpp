#include "margauss/approx_math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace margauss {

double Prediction::clamped() const {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

double Prediction::log_loss() const { return -std::log(clamped()); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double std_normal_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

double sigmoid_probit_bridge(double w) {
  return std_normal_cdf(std::sqrt(kPiOver8) * w);
}

Prediction shrunk_prediction(int y, double mu, double sigma_sq,
                             Likelihood kind) {
  if (sigma_sq < 0.0 || std::isnan(sigma_sq))
    throw std::domain_error("shrunk_prediction: negative variance");
  // The complement for -y is the same expression with the sign flipped, so
  // p(y) + p(-y) == 1 holds to the last bit only if both sides come from one
  // evaluation.
  double pos;
  if (kind == Likelihood::logistic) {
    pos = sigmoid(mu / std::sqrt(1.0 + kPiOver8 * sigma_sq));
  } else {
    pos = std_normal_cdf(mu / std::sqrt(1.0 + sigma_sq));
  }
  return {y > 0 ? pos : 1.0 - pos};
}

double quadrature_mixture_oracle(int y, double mu, double sigma_sq,
                                 Likelihood kind, int intervals) {
  if (sigma_sq < 0.0)
    throw std::domain_error("quadrature_mixture_oracle: negative variance");
  if (intervals % 2 != 0) ++intervals;
  const double sigma = std::sqrt(sigma_sq);
  const double lo = -10.0, hi = 10.0;
  const double h = (hi - lo) / intervals;
  auto f = [&](double z) {
    const double s = y * (mu + sigma * z);
    const double lik =
        kind == Likelihood::logistic ? sigmoid(s) : std_normal_cdf(s);
    return lik * std_normal_pdf(z);
  };
  double acc = f(lo) + f(hi);
  for (int k = 1; k < intervals; ++k)
    acc += (k % 2 == 1 ? 4.0 : 2.0) * f(lo + k * h);
  return acc * h / 3.0;
}

}  // namespace margauss
