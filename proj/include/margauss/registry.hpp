#pragma once

#include <memory>
#include <string>
#include <vector>

#include "margauss/baselines.hpp"
#include "margauss/learner.hpp"
#include "margauss/multidim_gauss.hpp"

namespace margauss {

/// Everything needed to build a learner from its command-line id.
struct AlgorithmSpec {
  std::string id = "gauss-taylor-laplace";
  PriorConfig prior;
  double newton_tol = 1e-10;
  int newton_max_iters = 50;
  MultiMode multi_mode = MultiMode::covariance;
  std::size_t dense_dim = 0;  // for dimgauss-dense-*
  SgdConfig sgd;
  VBConfig vb;
};

/// Ids accepted by make_learner; "vb-{N}" stands for any positive N.
std::vector<std::string> known_algorithm_ids();

bool is_stochastic(const std::string& id);

/// Throws std::invalid_argument for an unknown id.
std::unique_ptr<OnlineLearner> make_learner(const AlgorithmSpec& spec);

}  // namespace margauss
