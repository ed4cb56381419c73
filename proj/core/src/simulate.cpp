#include "qbss/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace qbss {

Mode mode_from_string(const std::string& s) {
  if (s == "regression") return Mode::regression;
  if (s == "ggm") return Mode::ggm;
  if (s == "spca") return Mode::spca;
  if (s == "benchmark") return Mode::benchmark;
  throw std::invalid_argument("unknown mode: " + s);
}

Method method_from_string(const std::string& s) {
  if (s == "mcmc") return Method::mcmc;
  if (s == "skinny") return Method::skinny;
  if (s == "midsize") return Method::midsize;
  if (s == "full") return Method::full;
  throw std::invalid_argument("unknown method: " + s);
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::regression: return "regression";
    case Mode::ggm: return "ggm";
    case Mode::spca: return "spca";
    case Mode::benchmark: return "benchmark";
  }
  return "?";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::mcmc: return "mcmc";
    case Method::skinny: return "skinny";
    case Method::midsize: return "midsize";
    case Method::full: return "full";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (p < 1 || n < 1) throw std::invalid_argument("config: p and n must be >= 1");
  if (psi < 0.0 || psi >= 1.0) throw std::invalid_argument("config: psi in [0,1)");
  if (!(vartheta >= 0.0)) throw std::invalid_argument("config: vartheta >= 0");
  if (s_star < 0 || s_star > p) throw std::invalid_argument("config: 0 <= s_star <= p");
  if (!(u > 0.0)) throw std::invalid_argument("config: u > 0");
  if (rho1 < 0.0 || rho0_inv < 0.0)
    throw std::invalid_argument("config: prior scales must be nonnegative");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("config: sigma2 > 0");
  if (n_iter < 1) throw std::invalid_argument("config: n_iter >= 1");
  if (burn_in >= n_iter) throw std::invalid_argument("config: burn_in < n_iter");
  if (replications < 1) throw std::invalid_argument("config: replications >= 1");
  if (template_size < 0)
    throw std::invalid_argument("config: template_size >= 0");
  if (mode == Mode::spca && cap < 1)
    throw std::invalid_argument("config: spca requires a model-size cap (set cap >= 1)");
}

double ExperimentConfig::rho1_value() const {
  return rho1 > 0.0 ? rho1 : std::sqrt(std::log(static_cast<double>(p)) / n);
}

double ExperimentConfig::rho0_value() const {
  return rho0_inv > 0.0 ? 1.0 / rho0_inv : 4.0 * n;
}

PriorSpec ExperimentConfig::make_prior(int dim) const {
  std::optional<int> prior_cap;
  if (mode == Mode::spca && cap >= 1) prior_cap = cap;
  return PriorSpec::make(rho0_value(), rho1_value(), u, dim, prior_cap);
}

RegressionData simulate_regression(const ExperimentConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.s_star > cfg.p)
    throw std::invalid_argument("simulate_regression: s_star > p");

  RegressionData out;
  out.X.resize(cfg.n, cfg.p);
  const double carry = cfg.psi;
  const double fresh = std::sqrt(1.0 - cfg.psi * cfg.psi);
  for (int i = 0; i < cfg.n; ++i) {
    double prev = rng.gaussian();
    out.X(i, 0) = prev;
    for (int j = 1; j < cfg.p; ++j) {
      prev = carry * prev + fresh * rng.gaussian();
      out.X(i, j) = prev;
    }
  }

  const double a =
      4.0 * std::sqrt(cfg.s_star * std::log(static_cast<double>(cfg.p)) / cfg.n);
  out.theta_star = VectorXd::Zero(cfg.p);
  for (int j = 0; j < cfg.s_star; ++j) {
    const double mag = a + rng.uniform();
    out.theta_star[j] = rng.bernoulli(0.5) ? mag : -mag;
  }

  out.y = out.X * out.theta_star;
  for (int i = 0; i < cfg.n; ++i) out.y[i] += rng.gaussian();
  return out;
}

SpikedData simulate_spiked(const ExperimentConfig& cfg, Rng& rng) {
  cfg.validate();
  SpikedData out;
  out.theta_star = VectorXd::Zero(cfg.p);
  if (cfg.p >= 5) {
    out.theta_star[0] = 0.5;
    out.theta_star[1] = 0.5;
    out.theta_star[3] = 0.5;
    out.theta_star[4] = 0.5;
  } else {
    out.theta_star[0] = 1.0;
  }

  const double load = std::sqrt(cfg.vartheta);
  out.X.resize(cfg.n, cfg.p);
  for (int i = 0; i < cfg.n; ++i) {
    const double g = rng.gaussian();
    for (int j = 0; j < cfg.p; ++j)
      out.X(i, j) = rng.gaussian() + load * g * out.theta_star[j];
  }
  return out;
}

}  // namespace qbss
