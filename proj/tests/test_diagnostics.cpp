#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"
#include "qbss/diagnostics.hpp"
#include "qbss/sampler.hpp"

using namespace qbss;
using namespace qbss::testing;

namespace {

GaussianRegressionQL random_ql(int n, int p, double sigma2, Rng& rng) {
  return GaussianRegressionQL(random_matrix(n, p, rng), random_vector(n, rng), sigma2);
}

MatrixXd random_spd(int p, Rng& rng) {
  const MatrixXd B = random_matrix(p + 2, p, rng);
  return B.transpose() * B / (p + 2) + 0.3 * MatrixXd::Identity(p, p);
}

// Closed-form KL(limit || posterior) for the Gaussian model: the posterior
// conditioned on delta_star is exactly Gaussian, so the model part and the
// Gaussian part separate.
double kl_oracle(const GaussianRegressionQL& ql, const PriorSpec& prior,
                 const BinaryModel& delta_star) {
  const ExactPosterior exact = enumerate_exact(prior, ql);
  const auto idx = delta_star.active_indices();
  const int s = static_cast<int>(idx.size());

  MatrixXd xs(ql.n(), s);
  for (int a = 0; a < s; ++a) xs.col(a) = ql.X().col(idx[a]);
  const MatrixXd info = xs.transpose() * xs / ql.sigma2();
  const VectorXd theta_hat =
      (xs.transpose() * xs).ldlt().solve(xs.transpose() * ql.y());

  const MatrixXd post_prec = info + prior.rho1 * MatrixXd::Identity(s, s);
  const MatrixXd post_cov = post_prec.inverse();
  const VectorXd post_mean = post_cov * (xs.transpose() * ql.y()) / ql.sigma2();

  return -std::log(exact.prob(delta_star)) +
         gaussian_kl(theta_hat, info.inverse(), post_mean, post_cov);
}

}  // namespace

TEST_CASE("gaussian_kl: zero at equality, exact in one dimension") {
  Rng rng(61);
  const int p = 3;
  const MatrixXd S = random_spd(p, rng);
  const VectorXd mu = random_vector(p, rng);
  CHECK(gaussian_kl(mu, S, mu, S) == doctest::Approx(0.0).epsilon(1e-12));

  // 1-d: KL = log(s2/s1) + (s1^2 + (m1-m2)^2)/(2 s2^2) - 1/2
  MatrixXd v1(1, 1), v2(1, 1);
  v1 << 0.49;
  v2 << 2.25;
  VectorXd m1(1), m2(1);
  m1 << 1.0;
  m2 << -0.5;
  const double expected =
      std::log(1.5 / 0.7) + (0.49 + 2.25) / (2.0 * 2.25) - 0.5;
  CHECK(gaussian_kl(m1, v1, m2, v2) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(gaussian_kl(m1, v1, mu, S), std::invalid_argument);
  MatrixXd indef(1, 1);
  indef << -1.0;
  CHECK_THROWS_AS(gaussian_kl(m1, indef, m2, v2), std::invalid_argument);
}

TEST_CASE("gaussian_kl matches a Monte Carlo estimate") {
  Rng rng(62);
  const int p = 3;
  const MatrixXd S1 = random_spd(p, rng);
  const MatrixXd S2 = random_spd(p, rng);
  const VectorXd mu1 = random_vector(p, rng);
  const VectorXd mu2 = random_vector(p, rng);
  const double exact = gaussian_kl(mu1, S1, mu2, S2);

  const Eigen::LLT<MatrixXd> llt1(S1), llt2(S2);
  double ld1 = 0.0, ld2 = 0.0;
  for (int i = 0; i < p; ++i) {
    ld1 += 2.0 * std::log(llt1.matrixL()(i, i));
    ld2 += 2.0 * std::log(llt2.matrixL()(i, i));
  }
  const MatrixXd L1 = llt1.matrixL();
  double mc = 0.0;
  const int draws = 200000;
  VectorXd z(p);
  for (int k = 0; k < draws; ++k) {
    for (int i = 0; i < p; ++i) z[i] = rng.gaussian();
    const VectorXd x = mu1 + L1 * z;
    const double lq1 = -0.5 * ld1 - 0.5 * (x - mu1).dot(llt1.solve(x - mu1));
    const double lq2 = -0.5 * ld2 - 0.5 * (x - mu2).dot(llt2.solve(x - mu2));
    mc += lq1 - lq2;
  }
  mc /= draws;
  CHECK(std::abs(mc - exact) < 0.01);
}

TEST_CASE("bvm_limit_from_fit: restricted MLE and information matrix") {
  Rng rng(63);
  const int n = 30, p = 6;
  const GaussianRegressionQL ql = random_ql(n, p, 1.7, rng);
  const PriorSpec prior = PriorSpec::make(10.0, 0.5, 2.0, p);
  const BinaryModel delta = BinaryModel::from_indices(p, {1, 4});
  const BvmLimit lim = bvm_limit_from_fit(ql, delta, prior);

  MatrixXd xs(n, 2);
  xs.col(0) = ql.X().col(1);
  xs.col(1) = ql.X().col(4);
  const VectorXd hat = (xs.transpose() * xs).ldlt().solve(xs.transpose() * ql.y());
  CHECK((lim.theta_hat - hat).norm() < 1e-10);
  CHECK((lim.info - xs.transpose() * xs / ql.sigma2()).norm() < 1e-10);
  CHECK(lim.rho0 == prior.rho0);

  // duplicated column makes the active design rank deficient
  MatrixXd Xdup = ql.X();
  Xdup.col(4) = Xdup.col(1);
  const GaussianRegressionQL qdup(Xdup, ql.y(), 1.0);
  CHECK_THROWS_AS(bvm_limit_from_fit(qdup, delta, prior), std::runtime_error);
}

TEST_CASE("kl_to_bvm is near zero when the posterior is its own limit") {
  // a nearly flat slab makes the density-ratio term R essentially constant
  Rng rng(64);
  const int n = 200, p = 3;
  MatrixXd X = random_matrix(n, p, rng);
  VectorXd theta_true(p);
  theta_true << 4.0, -3.0, 5.0;
  const VectorXd y = X * theta_true + 0.1 * random_vector(n, rng);
  const GaussianRegressionQL ql(X, y, 1.0);
  const PriorSpec prior = PriorSpec::make(4.0 * n, 1e-12, 2.0, p);
  const BinaryModel truth = BinaryModel::ones(p);

  SamplerConfig cfg;
  cfg.n_iter = 4000;
  cfg.burn_in = 1000;
  cfg.seed = 65;
  const Trace trace = run_chain(prior, ql, ModelState{truth, theta_true}, cfg);
  const BvmLimit lim = bvm_limit_from_fit(ql, truth, prior);
  const KlEstimate kl = kl_to_bvm(trace, lim, prior, ql);
  CHECK(std::abs(kl.estimate) < 2.0 * std::max(kl.std_error, 1e-10) + 1e-8);
}

TEST_CASE("kl_to_bvm matches the closed-form oracle on a small model") {
  Rng rng(66);
  const int n = 80, p = 3;
  MatrixXd X = random_matrix(n, p, rng);
  VectorXd theta_true(p);
  theta_true << 2.0, -2.5, 0.0;
  const VectorXd y = X * theta_true + random_vector(n, rng);
  const GaussianRegressionQL ql(X, y, 1.0);
  const PriorSpec prior = PriorSpec::make(4.0 * n, std::sqrt(std::log(3.0) / n), 2.0, p);
  const BinaryModel truth = BinaryModel::from_indices(p, {0, 1});
  const double oracle = kl_oracle(ql, prior, truth);

  SamplerConfig cfg;
  cfg.n_iter = 40000;
  cfg.burn_in = 5000;
  cfg.seed = 67;
  const Trace trace =
      run_chain(prior, ql, ModelState{truth, theta_true}, cfg);
  const BvmLimit lim = bvm_limit_from_fit(ql, truth, prior);
  const KlEstimate kl = kl_to_bvm(trace, lim, prior, ql);
  CHECK(std::abs(kl.estimate - oracle) < 3.0 * kl.std_error + 1e-4);
}

TEST_CASE("kl_to_bvm standard errors have frequentist coverage") {
  Rng rng(68);
  const int n = 80, p = 3;
  MatrixXd X = random_matrix(n, p, rng);
  VectorXd theta_true(p);
  theta_true << 2.0, -2.5, 0.0;
  const VectorXd y = X * theta_true + random_vector(n, rng);
  const GaussianRegressionQL ql(X, y, 1.0);
  const PriorSpec prior = PriorSpec::make(4.0 * n, std::sqrt(std::log(3.0) / n), 2.0, p);
  const BinaryModel truth = BinaryModel::from_indices(p, {0, 1});
  const double oracle = kl_oracle(ql, prior, truth);
  const BvmLimit lim = bvm_limit_from_fit(ql, truth, prior);

  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    SamplerConfig cfg;
    cfg.n_iter = 3000;
    cfg.burn_in = 500;
    cfg.seed = 1000 + rep;
    const Trace trace = run_chain(prior, ql, ModelState{truth, theta_true}, cfg);
    const KlEstimate kl = kl_to_bvm(trace, lim, prior, ql, 4000, 5000 + rep);
    if (std::abs(kl.estimate - oracle) <= 3.0 * kl.std_error) ++covered;
  }
  CHECK(covered >= 90);
}

TEST_CASE("contraction rate arithmetic and monotonicity") {
  CHECK(contraction_epsilon(100, 2, 2, 1.0, 1.0, 10.0) ==
        doctest::Approx(0.4).epsilon(1e-14));
  CHECK(contraction_epsilon(100, 2, 2, 1.0, 1.0, 20.0) >
        contraction_epsilon(100, 2, 2, 1.0, 1.0, 10.0));
  CHECK(contraction_epsilon(200, 2, 2, 1.0, 1.0, 10.0) <
        contraction_epsilon(100, 2, 2, 1.0, 1.0, 10.0));
  CHECK_THROWS_AS(contraction_epsilon(0, 2, 2, 1.0, 1.0, 10.0), std::invalid_argument);
}

TEST_CASE("enumerate_exact: flat likelihood recovers the prior") {
  const MatrixXd X = MatrixXd::Zero(10, 1);
  const VectorXd y = VectorXd::Ones(10);
  const GaussianRegressionQL ql(X, y, 1.0);
  const PriorSpec prior = PriorSpec::make(5.0, 1.0, 2.0, 1);
  const ExactPosterior exact = enumerate_exact(prior, ql);
  CHECK(exact.inclusion_probs[0] ==
        doctest::Approx(std::exp(prior.log_q)).epsilon(1e-12));
}

TEST_CASE("enumerate_exact: orthogonal design factorizes") {
  const int n = 8;
  MatrixXd X = MatrixXd::Zero(n, 2);
  for (int i = 0; i < 4; ++i) X(i, 0) = 1.0;
  for (int i = 4; i < n; ++i) X(i, 1) = 1.0;
  Rng rng(69);
  const VectorXd y = random_vector(n, rng);
  const double sigma2 = 0.8;
  const PriorSpec prior = PriorSpec::make(20.0, 0.5, 2.0, 2);
  const ExactPosterior joint = enumerate_exact(prior, GaussianRegressionQL(X, y, sigma2));

  // disjoint supports decouple the integrals, so the joint law over models
  // is the product of its own marginals
  const double marg[2] = {joint.inclusion_probs[0], joint.inclusion_probs[1]};
  CHECK(joint.prob(BinaryModel::from_indices(2, {0, 1})) ==
        doctest::Approx(marg[0] * marg[1]).epsilon(1e-10));
  CHECK(joint.prob(BinaryModel::from_indices(2, {0})) ==
        doctest::Approx(marg[0] * (1.0 - marg[1])).epsilon(1e-10));
  CHECK(joint.prob(BinaryModel(2)) ==
        doctest::Approx((1.0 - marg[0]) * (1.0 - marg[1])).epsilon(1e-10));
}

TEST_CASE("enumerate_exact: probabilities normalize and marginals are consistent") {
  Rng rng(70);
  const int n = 25, p = 8;
  const GaussianRegressionQL ql = random_ql(n, p, 1.0, rng);
  const PriorSpec prior = PriorSpec::make(4.0 * n, 0.3, 2.0, p);
  const ExactPosterior exact = enumerate_exact(prior, ql);

  double total = 0.0;
  VectorXd incl = VectorXd::Zero(p);
  for (unsigned mask = 0; mask < (1u << p); ++mask) {
    const double pr = std::exp(exact.log_probs[mask]);
    total += pr;
    for (int j = 0; j < p; ++j)
      if (mask & (1u << j)) incl[j] += pr;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK((incl - exact.inclusion_probs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("enumerate_exact is permutation equivariant") {
  Rng rng(71);
  const int n = 20, p = 5;
  const MatrixXd X = random_matrix(n, p, rng);
  const VectorXd y = random_vector(n, rng);
  const PriorSpec prior = PriorSpec::make(30.0, 0.4, 2.0, p);
  const ExactPosterior base = enumerate_exact(prior, GaussianRegressionQL(X, y, 1.0));

  const std::vector<int> perm = {3, 0, 4, 1, 2};
  MatrixXd Xp(n, p);
  for (int j = 0; j < p; ++j) Xp.col(j) = X.col(perm[j]);
  const ExactPosterior permuted =
      enumerate_exact(prior, GaussianRegressionQL(Xp, y, 1.0));
  for (int j = 0; j < p; ++j)
    CHECK(permuted.inclusion_probs[j] ==
          doctest::Approx(base.inclusion_probs[perm[j]]).epsilon(1e-10));
}

TEST_CASE("enumerate_exact respects the cap and the size limit") {
  Rng rng(72);
  const int n = 15, p = 4;
  const GaussianRegressionQL ql = random_ql(n, p, 1.0, rng);
  const PriorSpec prior = PriorSpec::make(20.0, 0.5, 2.0, p, 1);
  const ExactPosterior exact = enumerate_exact(prior, ql);
  for (unsigned mask = 0; mask < 16u; ++mask) {
    int bits = 0;
    for (int j = 0; j < p; ++j)
      if (mask & (1u << j)) ++bits;
    if (bits > 1) CHECK(exact.log_probs[mask] == kLogZero);
  }

  const GaussianRegressionQL big(MatrixXd::Zero(5, 21), VectorXd::Zero(5), 1.0);
  CHECK_THROWS_AS(enumerate_exact(PriorSpec::make(5.0, 1.0, 2.0, 21), big),
                  std::invalid_argument);
}

TEST_CASE("selection_report on a hand-counted fixture") {
  const int p = 4;
  Trace trace;
  // 4 samples: {0,1}, {0}, {0,1}, {0,1,3}
  trace.delta_samples = {
      BinaryModel::from_indices(p, {0, 1}), BinaryModel::from_indices(p, {0}),
      BinaryModel::from_indices(p, {0, 1}), BinaryModel::from_indices(p, {0, 1, 3})};
  for (int k = 0; k < 4; ++k) trace.theta_samples.push_back(VectorXd::Zero(p));

  const BinaryModel truth = BinaryModel::from_indices(p, {0, 1});
  const SelectionReport rep = selection_report(trace, truth);
  CHECK(rep.inclusion_probs[0] == doctest::Approx(1.0));
  CHECK(rep.inclusion_probs[1] == doctest::Approx(0.75));
  CHECK(rep.inclusion_probs[2] == doctest::Approx(0.0));
  CHECK(rep.inclusion_probs[3] == doctest::Approx(0.25));
  CHECK(rep.prob_true_model == doctest::Approx(0.5));
  CHECK(rep.median_model_size == doctest::Approx(2.0));
  CHECK(rep.mode_model == truth);
  CHECK(rep.fdr == doctest::Approx(0.0));
  CHECK(rep.fnr == doctest::Approx(0.0));
}

TEST_CASE("selection_report: empty-selection convention") {
  const int p = 3;
  Trace trace;
  for (int k = 0; k < 5; ++k) {
    trace.delta_samples.push_back(BinaryModel(p));
    trace.theta_samples.push_back(VectorXd::Zero(p));
  }
  const SelectionReport rep = selection_report(trace, BinaryModel(p));
  CHECK(rep.fdr == 0.0);
  CHECK(rep.fnr == 0.0);
  CHECK(rep.prob_true_model == 1.0);
  CHECK(rep.median_model_size == 0.0);
}
