#pragma once

#include <cstdint>
#include <string>

#include "qbss/model.hpp"
#include "qbss/rng.hpp"

namespace qbss {

enum class Mode { regression, ggm, spca, benchmark };
enum class Method { mcmc, skinny, midsize, full };

Mode mode_from_string(const std::string& s);
Method method_from_string(const std::string& s);
std::string to_string(Mode m);
std::string to_string(Method m);

struct ExperimentConfig {
  Mode mode = Mode::regression;
  int p = 1000;
  int n = 500;
  double psi = 0.0;       // AR design correlation, in [0,1)
  double vartheta = 20.0; // spiked-covariance spectral gap
  int s_star = 10;
  double u = 2.0;
  double rho1 = 0.0;      // 0 = default sqrt(log(p)/n)
  double rho0_inv = 0.0;  // 0 = default 1/(4n)
  double sigma2 = 1.0;
  int n_iter = 5000;
  int burn_in = -1;       // -1 = default n_iter/2
  std::uint64_t seed = 0;
  int replications = 1;
  Method method = Method::mcmc;
  int template_size = 100;
  int cap = 0;            // spca model-size cap; must be set by the user

  void validate() const;
  double rho1_value() const;
  double rho0_value() const;
  int burn_in_value() const { return burn_in >= 0 ? burn_in : n_iter / 2; }
  PriorSpec make_prior(int dim) const;
};

struct RegressionData {
  MatrixXd X;
  VectorXd y;
  VectorXd theta_star;
};

// Rows of X i.i.d. Gaussian with AR(psi) correlation psi^{|i-j|};
// theta_star has s_star leading entries drawn +-U(a, a+1) with
// a = 4 sqrt(s_star log(p) / n); y = X theta_star + N(0, I).
RegressionData simulate_regression(const ExperimentConfig& cfg, Rng& rng);

struct SpikedData {
  MatrixXd X;
  VectorXd theta_star;  // unit norm
};

// Rows i.i.d. N(0, vartheta theta* theta*' + I), sampled as z + sqrt(vartheta) g theta*.
// theta_star defaults to (0.5, 0.5, 0, 0.5, 0.5, 0, ...).
SpikedData simulate_spiked(const ExperimentConfig& cfg, Rng& rng);

}  // namespace qbss
