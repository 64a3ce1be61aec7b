#pragma once

#include <numbers>

namespace margauss {

/// pi / 8: the squared scale that maps a sigmoid onto a unit-variance probit.
inline constexpr double kPiOver8 = std::numbers::pi / 8.0;

/// Probabilities are clamped to this margin before logs are taken.
inline constexpr double kProbClamp = 1e-12;

enum class Likelihood { logistic, probit };

/// Probability assigned to the observed label.
struct Prediction {
  double p = 0.5;

  /// p clamped to [kProbClamp, 1 - kProbClamp], for loss accounting.
  double clamped() const;
  /// -log of the clamped probability.
  double log_loss() const;
};

double sigmoid(double z);
/// log(1 + exp(z)) without overflow.
double softplus(double z);

double std_normal_pdf(double z);
double std_normal_cdf(double z);

/// Phi(sqrt(pi/8) * w), the probit stand-in for sigmoid(w).
double sigmoid_probit_bridge(double w);

/// Probability of label y when the score is N(mu, sigma_sq):
/// logistic: sigmoid(y mu / sqrt(1 + pi/8 sigma_sq)),
/// probit:   Phi(y mu / sqrt(1 + sigma_sq)).
/// Throws std::domain_error for negative sigma_sq.
Prediction shrunk_prediction(int y, double mu, double sigma_sq, Likelihood kind);

/// Reference value of the Gaussian-marginalized likelihood
///   int lik(y (mu + sigma z)) phi(z) dz
/// by composite Simpson over z in [-10, 10]. Meant for tests and diagnostics.
double quadrature_mixture_oracle(int y, double mu, double sigma_sq,
                                 Likelihood kind, int intervals = 4000);

}  // namespace margauss
