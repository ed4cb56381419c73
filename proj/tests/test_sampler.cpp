#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>

#include "helpers.hpp"
#include "qbss/diagnostics.hpp"
#include "qbss/sampler.hpp"

using namespace qbss;
using namespace qbss::testing;

namespace {

// Zero log-likelihood everywhere; isolates the prior dynamics.
class FlatQL : public QuasiLikelihood {
 public:
  explicit FlatQL(int p) : p_(p) {}
  int dim() const override { return p_; }
  double loglik(const BinaryModel&, const VectorXd&) const override { return 0.0; }
  double coordinate_delta(const BinaryModel&, const VectorXd&, int) const override {
    return 0.0;
  }

 private:
  int p_;
};

GaussianRegressionQL random_ql(int n, int p, double sigma2, Rng& rng) {
  return GaussianRegressionQL(random_matrix(n, p, rng), random_vector(n, rng), sigma2);
}

}  // namespace

TEST_CASE("flip_ratio equals the log density ratio of the joint integrand") {
  Rng rng(31);
  const int n = 25, p = 10;
  const GaussianRegressionQL ql = random_ql(n, p, 0.8, rng);
  const PriorSpec prior = PriorSpec::make(12.0, 0.4, 2.0, p);

  for (int rep = 0; rep < 10; ++rep) {
    ModelState state;
    state.delta = BinaryModel(p);
    for (int j = 0; j < p; ++j) state.delta.set(j, rng.bernoulli(0.5));
    state.theta = random_vector(p, rng);
    for (int j = 0; j < p; ++j) {
      BinaryModel on = state.delta, off = state.delta;
      on.set(j, true);
      off.set(j, false);
      const double oracle =
          (log_prior(on, state.theta, prior) + sparsified_loglik(ql, on, state.theta)) -
          (log_prior(off, state.theta, prior) + sparsified_loglik(ql, off, state.theta));
      CHECK(flip_ratio(prior, ql, state, j) == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("step_theta_generic: all-inactive coordinates are pure prior refreshes") {
  const int p = 10;
  const PriorSpec prior = PriorSpec::make(7.0, 0.5, 2.0, p);
  const FlatQL ql(p);
  Rng rng(32);
  ModelState state{BinaryModel(p), VectorXd::Zero(p)};
  const InnerKernel kernel = random_walk_kernel();

  double sum = 0.0, sum_sq = 0.0;
  const int draws = 100000 / p;
  for (int k = 0; k < draws; ++k) {
    step_theta_generic(prior, ql, state, kernel, rng);
    for (int j = 0; j < p; ++j) {
      sum += state.theta[j];
      sum_sq += state.theta[j] * state.theta[j];
    }
  }
  const double n = static_cast<double>(draws) * p;
  const double var = sum_sq / n - (sum / n) * (sum / n);
  CHECK(var == doctest::Approx(1.0 / prior.rho0).epsilon(0.03));
}

TEST_CASE("generic step with a conjugate kernel matches the linear step in law") {
  Rng rng(33);
  const int n = 40, p = 6;
  const GaussianRegressionQL ql = random_ql(n, p, 1.2, rng);
  const PriorSpec prior = PriorSpec::make(30.0, 0.6, 2.0, p);
  const BinaryModel delta = BinaryModel::from_indices(p, {1, 3, 4});

  // independent oracle: dense solve of the conditional Gaussian
  const auto active = delta.active_indices();
  const int s = static_cast<int>(active.size());
  MatrixXd xs(n, s);
  for (int a = 0; a < s; ++a) xs.col(a) = ql.X().col(active[a]);
  const MatrixXd A =
      xs.transpose() * xs + ql.sigma2() * prior.rho1 * MatrixXd::Identity(s, s);
  const Eigen::LLT<MatrixXd> llt(A);
  const VectorXd m = llt.solve(xs.transpose() * ql.y());
  const MatrixXd L = llt.matrixL();

  Rng oracle_rng(77);
  const InnerKernel conjugate = [&](VectorXd& u, const auto&, Rng&) {
    VectorXd z(s);
    for (int a = 0; a < s; ++a) z[a] = oracle_rng.gaussian();
    u = m + std::sqrt(ql.sigma2()) * L.transpose().triangularView<Eigen::Upper>().solve(z);
  };

  const int draws = 10000;
  std::vector<double> generic_draws(draws), linear_draws(draws);
  Rng rng_g(34), rng_l(35);
  ModelState sg{delta, VectorXd::Zero(p)}, sl{delta, VectorXd::Zero(p)};
  for (int k = 0; k < draws; ++k) {
    step_theta_generic(prior, ql, sg, conjugate, rng_g);
    step_theta_linear(prior, ql, sl, rng_l);
    generic_draws[k] = sg.theta[active[1]];
    linear_draws[k] = sl.theta[active[1]];
  }
  CHECK(ks_pvalue(generic_draws, linear_draws) > 0.01);
}

TEST_CASE("step_theta_linear: empty active set is a pure refresh") {
  const int p = 6;
  const PriorSpec prior = PriorSpec::make(9.0, 1.0, 2.0, p);
  Rng rng(36);
  const GaussianRegressionQL ql = random_ql(10, p, 1.0, rng);
  ModelState state{BinaryModel(p), VectorXd::Zero(p)};
  Rng chain_rng(37);
  double sum_sq = 0.0;
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    step_theta_linear(prior, ql, state, chain_rng);
    sum_sq += state.theta.squaredNorm();
  }
  CHECK(sum_sq / (static_cast<double>(draws) * p) ==
        doctest::Approx(1.0 / prior.rho0).epsilon(0.05));
}

TEST_CASE("step_delta: gated proposals leave delta unchanged") {
  const int p = 5;
  Rng rng(38);
  const GaussianRegressionQL ql = random_ql(20, p, 1.0, rng);
  const PriorSpec prior = PriorSpec::make(10.0, 0.5, 2.0, p);
  SamplerConfig cfg;
  cfg.cap = 0;  // every 0->1 proposal is outside the support
  ModelState state{BinaryModel(p), random_vector(p, rng)};
  Rng chain_rng(39);
  for (int k = 0; k < 200; ++k) {
    step_delta(prior, ql, state, cfg, chain_rng);
    CHECK(state.delta.active_count() == 0);
  }
}

TEST_CASE("single-coordinate flat chain has stationary inclusion probability q") {
  // rho1 = rho0 makes log A_j free of theta: a two-state Markov chain whose
  // transition probabilities (and hence the asymptotic variance of the
  // occupancy fraction) are known exactly.
  const int p = 2;
  const double u = 2.0;
  const PriorSpec prior = PriorSpec::make(3.0, 3.0, u, p);
  const FlatQL ql(p);
  const double q = std::exp(prior.log_q);
  const double a_ratio = std::exp(prior.log_q_ratio());

  for (bool lazy : {true, false}) {
    SamplerConfig cfg;
    cfg.lazy_half = lazy;
    const double h = lazy ? 0.5 : 1.0;
    const double p01 = 0.5 * h * std::min(1.0, a_ratio);
    const double p10 = 0.5 * h * std::min(1.0, 1.0 / a_ratio);
    const double pi1 = p01 / (p01 + p10);
    CHECK(pi1 == doctest::Approx(q).epsilon(1e-12));

    const double lambda = 1.0 - p01 - p10;
    const long sweeps = 1000000;
    const double se =
        std::sqrt(pi1 * (1.0 - pi1) * (1.0 + lambda) / (1.0 - lambda) / sweeps);

    ModelState state{BinaryModel(p), VectorXd::Zero(p)};
    Rng rng(40 + lazy);
    long count = 0;
    for (long k = 0; k < sweeps; ++k) {
      step_delta(prior, ql, state, cfg, rng);
      if (state.delta.get(0)) ++count;
    }
    const double freq = static_cast<double>(count) / sweeps;
    CHECK(std::abs(freq - q) < 3.0 * se);
  }
}

TEST_CASE("chain marginals agree with exact enumeration on a small instance") {
  Rng rng(42);
  const int n = 30, p = 5;
  const GaussianRegressionQL ql = random_ql(n, p, 1.0, rng);
  const PriorSpec prior = PriorSpec::make(4.0 * n, std::sqrt(std::log(5.0) / n), 2.0, p);
  const ExactPosterior exact = enumerate_exact(prior, ql);

  SamplerConfig cfg;
  cfg.n_iter = 50000;
  cfg.burn_in = 5000;
  cfg.seed = 43;
  const Trace trace =
      run_chain(prior, ql, ModelState{BinaryModel(p), VectorXd::Zero(p)}, cfg);

  for (int j = 0; j < p; ++j) {
    std::vector<double> indicator(trace.size());
    double mean = 0.0;
    for (int k = 0; k < trace.size(); ++k) {
      indicator[k] = trace.delta_samples[k].get(j) ? 1.0 : 0.0;
      mean += indicator[k];
    }
    mean /= trace.size();
    const double se = std::max(batch_se(indicator), 1e-5);
    CHECK(std::abs(mean - exact.inclusion_probs[j]) < 4.0 * se);
  }
}

TEST_CASE("run_chain: deterministic given seed, floor thinning convention") {
  Rng rng(44);
  const int p = 6;
  const GaussianRegressionQL ql = random_ql(20, p, 1.0, rng);
  const PriorSpec prior = PriorSpec::make(20.0, 0.5, 2.0, p);
  SamplerConfig cfg;
  cfg.n_iter = 10;
  cfg.burn_in = 3;
  cfg.thin = 2;
  cfg.seed = 99;
  const ModelState init{BinaryModel(p), VectorXd::Zero(p)};
  const Trace t1 = run_chain(prior, ql, init, cfg);
  const Trace t2 = run_chain(prior, ql, init, cfg);
  CHECK(t1.size() == (10 - 3) / 2);
  REQUIRE(t1.size() == t2.size());
  for (int k = 0; k < t1.size(); ++k) {
    CHECK(t1.delta_samples[k] == t2.delta_samples[k]);
    CHECK(t1.theta_samples[k] == t2.theta_samples[k]);
  }

  SamplerConfig bad = cfg;
  bad.burn_in = 10;
  CHECK_THROWS_AS(run_chain(prior, ql, init, bad), std::invalid_argument);
}

TEST_CASE("run_chain rejects initial states outside the support") {
  Rng rng(45);
  const int p = 4;
  const GaussianRegressionQL ql = random_ql(15, p, 1.0, rng);
  const PriorSpec prior = PriorSpec::make(10.0, 0.5, 2.0, p, 1);
  SamplerConfig cfg;
  cfg.n_iter = 5;
  const ModelState init{BinaryModel::from_indices(p, {0, 1}), VectorXd::Zero(p)};
  CHECK_THROWS_AS(run_chain(prior, ql, init, cfg), std::invalid_argument);
}

TEST_CASE("lasso_init satisfies the KKT conditions") {
  Rng rng(46);
  const int n = 40, p = 6;
  const MatrixXd X = random_matrix(n, p, rng);
  VectorXd theta_true = VectorXd::Zero(p);
  theta_true[0] = 2.0;
  theta_true[2] = -1.5;
  const VectorXd y = X * theta_true + 0.3 * random_vector(n, rng);
  const GaussianRegressionQL ql(X, y, 1.0);
  const double lambda = 0.1;
  const ModelState sol = lasso_init(ql, lambda);

  const VectorXd r = y - X * sol.theta;
  for (int j = 0; j < p; ++j) {
    const double grad = X.col(j).dot(r) / n;
    if (sol.theta[j] != 0.0) {
      CHECK(std::abs(grad - lambda * (sol.theta[j] > 0 ? 1.0 : -1.0)) < 1e-6);
      CHECK(sol.delta.get(j));
    } else {
      CHECK(std::abs(grad) <= lambda + 1e-6);
      CHECK(!sol.delta.get(j));
    }
  }
}

TEST_CASE("flip acceptance tallies are recorded") {
  Rng rng(47);
  const int p = 5;
  const GaussianRegressionQL ql = random_ql(30, p, 1.0, rng);
  const PriorSpec prior = PriorSpec::make(10.0, 0.5, 2.0, p);
  SamplerConfig cfg;
  cfg.n_iter = 500;
  const Trace trace =
      run_chain(prior, ql, ModelState{BinaryModel(p), VectorXd::Zero(p)}, cfg);
  REQUIRE(trace.flip_accepts.size() == static_cast<std::size_t>(p));
  long total = 0;
  for (long c : trace.flip_accepts) total += c;
  CHECK(total > 0);
}
