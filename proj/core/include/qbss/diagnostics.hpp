#pragma once

#include <vector>

#include "qbss/model.hpp"
#include "qbss/sampler.hpp"

namespace qbss {

// Product limit: point mass on delta_star, N(theta_hat, info^{-1}) on the
// active block, spike noise off-support.
struct BvmLimit {
  BinaryModel delta_star;
  VectorXd theta_hat;  // length |delta_star|
  MatrixXd info;       // X'X / sigma^2 on the active block
  double rho0 = 0.0;
};

struct SelectionReport {
  VectorXd inclusion_probs;
  BinaryModel mode_model;  // median-probability model, threshold 0.5
  double prob_true_model = 0.0;
  double fdr = 0.0;
  double fnr = 0.0;
  double median_model_size = 0.0;
};

struct KlEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Closed-form KL between N(mu1, S1) and N(mu2, S2).
double gaussian_kl(const VectorXd& mu1, const MatrixXd& S1, const VectorXd& mu2,
                   const MatrixXd& S2);

BvmLimit bvm_limit_from_fit(const GaussianRegressionQL& ql, const BinaryModel& delta_star,
                            const PriorSpec& prior);

// Monte Carlo estimate of KL(limit || Pi) via the density-ratio identity:
// analytic draws from the limit for the forward term, trace samples for
// the normalizer E_Pi[ e^{-R} 1{delta = delta_star} ].
KlEstimate kl_to_bvm(const Trace& trace, const BvmLimit& limit, const PriorSpec& prior,
                     const GaussianRegressionQL& ql, int n_draws = 10000,
                     std::uint64_t seed = 12345);

// Linear-model contraction rate 2 sigma^2 (sbar+sstar)^{1/2} rho_bar / (n vmin).
double contraction_epsilon(int n, int sbar, int sstar, double sigma2, double vmin,
                           double rho_bar);

// Brute-force 2^p enumeration of the marginal posterior over models,
// integrating theta out analytically. Hard limit p <= 20.
struct ExactPosterior {
  std::vector<double> log_probs;  // indexed by bitmask, normalized
  VectorXd inclusion_probs;
  int p = 0;

  double prob(const BinaryModel& delta) const;
};

ExactPosterior enumerate_exact(const PriorSpec& prior, const GaussianRegressionQL& ql);

SelectionReport selection_report(const Trace& trace, const BinaryModel& truth);

}  // namespace qbss
