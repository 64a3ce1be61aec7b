#include "margauss/registry.hpp"

#include <charconv>
#include <stdexcept>

#include "margauss/marginal_logistic.hpp"
#include "margauss/marginal_probit.hpp"

namespace margauss {

std::vector<std::string> known_algorithm_ids() {
  return {"gauss-newton-peak",     "gauss-newton-laplace", "gauss-taylor-peak",
          "gauss-taylor-laplace",  "probit-newton",        "probit-taylor",
          "dimgauss-newton",       "dimgauss-taylor",      "dimgauss-dense-newton",
          "dimgauss-dense-taylor", "adf",                  "vb-{N}",
          "sgd-adagrad"};
}

bool is_stochastic(const std::string& id) { return id.rfind("vb-", 0) == 0; }

std::unique_ptr<OnlineLearner> make_learner(const AlgorithmSpec& spec) {
  const std::string& id = spec.id;
  LogisticUpdateConfig lcfg;
  lcfg.newton_tol = spec.newton_tol;
  lcfg.newton_max_iters = spec.newton_max_iters;
  MultiUpdateConfig mcfg;
  mcfg.newton_tol = spec.newton_tol;
  mcfg.newton_max_iters = spec.newton_max_iters;
  mcfg.mode = spec.multi_mode;

  if (id.rfind("gauss-", 0) == 0) {
    const std::string rest = id.substr(6);
    if (rest.rfind("newton-", 0) == 0) {
      lcfg.mean_method = MeanMethod::newton;
    } else if (rest.rfind("taylor-", 0) == 0) {
      lcfg.mean_method = MeanMethod::taylor;
    } else {
      throw std::invalid_argument("unknown algorithm '" + id + "'");
    }
    const std::string var = rest.substr(7);
    if (var == "peak") {
      lcfg.var_method = VarianceMethod::peak;
    } else if (var == "laplace") {
      lcfg.var_method = VarianceMethod::laplace;
    } else {
      throw std::invalid_argument("unknown algorithm '" + id + "'");
    }
    return std::make_unique<MarginalLogistic>(spec.prior, lcfg);
  }
  if (id == "probit-newton" || id == "probit-taylor") {
    lcfg.mean_method = id == "probit-newton" ? MeanMethod::newton : MeanMethod::taylor;
    return std::make_unique<MarginalProbit>(spec.prior, lcfg);
  }
  if (id == "dimgauss-newton" || id == "dimgauss-taylor") {
    mcfg.method = id == "dimgauss-newton" ? MeanMethod::newton : MeanMethod::taylor;
    return std::make_unique<MultiDimGauss>(spec.prior, mcfg);
  }
  if (id == "dimgauss-dense-newton" || id == "dimgauss-dense-taylor") {
    mcfg.method =
        id == "dimgauss-dense-newton" ? MeanMethod::newton : MeanMethod::taylor;
    return std::make_unique<DenseDimGauss>(spec.dense_dim, spec.prior, mcfg);
  }
  if (id == "adf") return std::make_unique<AdfLearner>(spec.prior);
  if (id == "sgd-adagrad") return std::make_unique<SgdAdagrad>(spec.sgd);
  if (id.rfind("vb-", 0) == 0) {
    const std::string n = id.substr(3);
    int samples = 0;
    auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), samples);
    if (ec != std::errc() || ptr != n.data() + n.size() || samples < 1)
      throw std::invalid_argument("vb id needs a positive sample count, got '" +
                                  id + "'");
    VBConfig vb = spec.vb;
    vb.n_samples = samples;
    return std::make_unique<VariationalLearner>(spec.prior, vb);
  }
  throw std::invalid_argument("unknown algorithm '" + id + "'");
}

}  // namespace margauss
