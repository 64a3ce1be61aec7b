#include <doctest.h>

#include <cmath>
#include <random>

#include "margauss/marginal_logistic.hpp"
#include "margauss/multidim_gauss.hpp"
#include "oracles.hpp"

using namespace margauss;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + 0.1 * MatrixXd::Identity(n, n);
}

VectorXd random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

ActiveSlice<double> random_slice(std::mt19937_64& rng, Eigen::Index n, bool diagonal) {
  ActiveSlice<double> s;
  s.x = random_vec(rng, n);
  s.u = random_vec(rng, n, 0.7);
  if (diagonal) {
    std::uniform_real_distribution<double> v(0.05, 2.0);
    s.sigma = MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) s.sigma(i, i) = v(rng);
  } else {
    s.sigma = random_spd(rng, n);
  }
  return s;
}

}  // namespace

TEST_CASE("Sherman-Morrison downdate equals direct inversion") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> alpha(0.0, 0.25);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::Index n = 1 + rep % 5;
    const MatrixXd S = random_spd(rng, n);
    const VectorXd x = random_vec(rng, n);
    const double a = alpha(rng);
    const MatrixXd sm = sherman_morrison_downdate(S, x, a);
    const MatrixXd direct = (S.inverse() + a * x * x.transpose()).inverse();
    worst = std::max(worst, (sm - direct).cwiseAbs().maxCoeff());
    CHECK((sm - sm.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("Sherman-Morrison edge cases") {
  const MatrixXd S = (MatrixXd(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
  const VectorXd x = VectorXd::Ones(2);
  CHECK((sherman_morrison_downdate(S, x, 0.0) - S).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(sherman_morrison_downdate(S, x, -0.1), std::domain_error);
  const MatrixXd not_spd = (MatrixXd(2, 2) << 1.0, 2.0, 2.0, 1.0).finished();
  CHECK_THROWS_AS(sherman_morrison_downdate(not_spd, x, 0.1), std::domain_error);
  const MatrixXd not_sym = (MatrixXd(2, 2) << 1.0, 0.5, 0.0, 1.0).finished();
  CHECK_THROWS_AS(sherman_morrison_downdate(not_sym, x, 0.1), std::domain_error);
  // diagonal shortcut agrees with the full formula
  const VectorXd d = (VectorXd(3) << 0.5, 1.5, 2.0).finished();
  const VectorXd x3 = (VectorXd(3) << 1.0, -2.0, 0.5).finished();
  const MatrixXd full = sherman_morrison_downdate(MatrixXd(d.asDiagonal()), x3, 0.2);
  CHECK((sherman_morrison_diagonal(d, x3, 0.2) - full.diagonal()).cwiseAbs().maxCoeff() <
        1e-15);
}

TEST_CASE("zero feature vector changes nothing") {
  std::mt19937_64 rng(22);
  ActiveSlice<double> s = random_slice(rng, 3, false);
  s.x.setZero();
  MultiUpdateConfig cfg;
  const auto n = update_newton_multi(s, 1, cfg);
  const auto t = update_taylor_multi(s, -1);
  CHECK((n.u - s.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.u - s.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.sigma - s.sigma).cwiseAbs().maxCoeff() < 1e-15);
  const MatrixXd H = s.sigma.inverse();
  const auto pr = update_precision_mode<double>(s.u, H, s.x, 1, cfg);
  CHECK((pr.sigma - H).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single active feature reduces to the marginal updates") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> mu(-2, 2), var(0.01, 3), xs(-2, 2);
  MultiUpdateConfig mcfg;
  mcfg.newton_tol = 1e-13;
  LogisticUpdateConfig lcfg;
  lcfg.newton_tol = 1e-13;
  for (int rep = 0; rep < 2000; ++rep) {
    const GaussianParam p{mu(rng), var(rng)};
    const double x = xs(rng);
    const int y = rep % 2 ? 1 : -1;
    ActiveSlice<double> s;
    s.x = VectorXd::Constant(1, x);
    s.u = VectorXd::Constant(1, p.mean);
    s.sigma = MatrixXd::Constant(1, 1, p.variance);

    const auto t = update_taylor_multi(s, y);
    const double mt = mean_update_taylor(p, y, x, {});
    CHECK(std::abs(t.u[0] - mt) <= 1e-12 * std::max(1.0, std::abs(mt)));
    const double vt = var_update_laplace(p, y, x, {}, p_at(y, x, mt, {}));
    CHECK(std::abs(t.sigma(0, 0) - vt) <= 1e-12 * vt);

    const auto n = update_newton_multi(s, y, mcfg);
    const double mn = mean_update_newton(p, y, x, {}, lcfg).mean;
    CHECK(std::abs(n.u[0] - mn) <= 1e-9);
  }
}

TEST_CASE("joint Newton matches a dense-solve oracle") {
  std::mt19937_64 rng(24);
  MultiUpdateConfig cfg;
  cfg.newton_tol = 1e-12;
  for (int rep = 0; rep < 300; ++rep) {
    const Eigen::Index n = 2 + rep % 4;
    const ActiveSlice<double> s = random_slice(rng, n, rep % 2 == 0);
    const int y = rep % 3 ? 1 : -1;
    const auto got = update_newton_multi(s, y, cfg);
    const auto [mode, cov] = margauss::testing::dense_laplace(s.u, s.sigma, s.x, y);
    CHECK((got.u - mode).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, mode.cwiseAbs().maxCoeff()));
    CHECK((got.sigma - cov).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, cov.cwiseAbs().maxCoeff()));
    CHECK(got.converged);
  }
}

TEST_CASE("Taylor downdate keeps the covariance SPD and shrinks the diagonal") {
  std::mt19937_64 rng(25);
  int strict = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const ActiveSlice<double> s = random_slice(rng, 4, rep % 2 == 0);
    const auto t = update_taylor_multi(s, rep % 3 ? 1 : -1);
    CHECK_NOTHROW(require_spd(t.sigma));
    CHECK((t.sigma - t.sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    // a saturated sigmoid can make the downdate vanish in double precision
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(t.sigma(i, i) <= s.sigma(i, i));
      strict += t.sigma(i, i) < s.sigma(i, i);
    }
  }
  CHECK(strict >= 4 * 500 * 3 / 4);
}

TEST_CASE("precision mode agrees with covariance mode") {
  std::mt19937_64 rng(26);
  for (auto method : {MeanMethod::taylor, MeanMethod::newton}) {
    MultiUpdateConfig cfg;
    cfg.method = method;
    cfg.newton_tol = 1e-12;
    for (int rep = 0; rep < 300; ++rep) {
      const Eigen::Index n = 1 + rep % 5;
      const ActiveSlice<double> s = random_slice(rng, n, rep % 2 == 0);
      const int y = rep % 3 ? 1 : -1;
      const auto cov =
          method == MeanMethod::taylor ? update_taylor_multi(s, y) : update_newton_multi(s, y, cfg);
      const MatrixXd H = s.sigma.inverse();
      const auto pr = update_precision_mode<double>(s.u, H, s.x, y, cfg);
      CHECK((pr.u - cov.u).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((MatrixXd(pr.sigma.inverse()) - cov.sigma).cwiseAbs().maxCoeff() <= 1e-10);
      // the precision increment is a PSD rank-one matrix
      const MatrixXd inc = pr.sigma - H;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (inc + inc.transpose()));
      const VectorXd ev = es.eigenvalues();
      CHECK(ev.minCoeff() >= -1e-10 * std::max(1.0, ev.maxCoeff()));
      int rank = 0;
      for (Eigen::Index i = 0; i < ev.size(); ++i) rank += ev[i] > 1e-9 * std::max(1.0, ev.maxCoeff());
      CHECK(rank <= 1);
    }
  }
}

TEST_CASE("templated on the scalar type") {
  ActiveSlice<float> s;
  s.x = Vec<float>::Ones(2);
  s.u = Vec<float>::Zero(2);
  s.sigma = Mat<float>::Identity(2, 2);
  const auto t = update_taylor_multi(s, 1);
  CHECK(t.u[0] > 0.0f);
  const auto l = update_taylor_multi(ActiveSlice<long double>{
                                         {}, Vec<long double>::Ones(1),
                                         Vec<long double>::Zero(1),
                                         Mat<long double>::Identity(1, 1)},
                                     1);
  CHECK(static_cast<double>(l.u[0]) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("sparse driver") {
  MultiDimGauss learner({}, {});
  CHECK(learner.process({{}, 1}).p == 0.5);
  CHECK(learner.state().size() == 0);
  CHECK(learner.name() == "dimgauss-taylor");

  // one active feature per example: same trajectory as the marginal learner
  LogisticUpdateConfig lcfg;
  lcfg.mean_method = MeanMethod::taylor;
  MarginalLogistic marginal({}, lcfg);
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> xs(-1.5, 1.5);
  for (int t = 0; t < 1000; ++t) {
    const SparseExample ex{{{static_cast<FeatureId>(rng() % 3), xs(rng)}}, rng() % 2 ? 1 : -1};
    const double a = learner.process(ex).p;
    const double b = marginal.process(ex).p;
    CHECK(std::abs(a - b) < 1e-9);
  }
  for (FeatureId id = 0; id < 3; ++id) {
    CHECK(std::abs(learner.state().get_or_init(id).mean - marginal.state().get_or_init(id).mean) < 1e-9);
    CHECK(std::abs(learner.state().get_or_init(id).variance -
                   marginal.state().get_or_init(id).variance) < 1e-9);
  }
}

TEST_CASE("sparse driver precision mode matches covariance mode") {
  MultiUpdateConfig cov_cfg, prec_cfg;
  prec_cfg.mode = MultiMode::precision;
  MultiDimGauss a({}, cov_cfg), b({}, prec_cfg);
  std::mt19937_64 rng(28);
  std::uniform_real_distribution<double> xs(-1, 1);
  for (int t = 0; t < 300; ++t) {
    SparseExample ex;
    ex.label = rng() % 2 ? 1 : -1;
    for (FeatureId id = 0; id < 6; ++id)
      if (rng() % 2) ex.features.push_back({id, xs(rng)});
    CHECK(std::abs(a.process(ex).p - b.process(ex).p) < 1e-9);
  }
}

TEST_CASE("dense joint learner") {
  CHECK_THROWS_AS(DenseDimGauss(0, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(DenseDimGauss(1001, {}, {}), std::invalid_argument);
  DenseDimGauss dense(4, {}, {});
  CHECK_THROWS_AS(dense.process({{{4, 1.0}}, 1}), std::invalid_argument);

  // the first example starts from a diagonal covariance, so it matches the
  // sparse driver exactly
  MultiDimGauss sparse({}, {});
  const SparseExample ex{{{0, 1.0}, {2, -0.5}, {3, 2.0}}, -1};
  CHECK(dense.process(ex).p == doctest::Approx(sparse.process(ex).p));
  for (FeatureId id : {0, 2, 3}) {
    const auto i = static_cast<Eigen::Index>(id);
    CHECK(dense.mean()[i] == doctest::Approx(sparse.state().get_or_init(id).mean).epsilon(1e-12));
    CHECK(dense.covariance()(i, i) ==
          doctest::Approx(sparse.state().get_or_init(id).variance).epsilon(1e-12));
  }
  CHECK(dense.covariance()(0, 2) != 0.0);  // correlations are kept
  CHECK(dense.covariance()(1, 1) == 1.0);
  CHECK_NOTHROW(require_spd(dense.covariance()));
}
