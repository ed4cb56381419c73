#include "qbss/sampler.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>

namespace qbss {

double flip_ratio(const PriorSpec& prior, const QuasiLikelihood& ql,
                  const ModelState& state, int j) {
  const double tj = state.theta[j];
  return prior.log_q_ratio() + 0.5 * std::log(prior.rho1 / prior.rho0) -
         0.5 * (prior.rho1 - prior.rho0) * tj * tj +
         loglik_coordinate_delta(ql, state.delta, state.theta, j);
}

InnerKernel random_walk_kernel(int n_steps) {
  return [n_steps](VectorXd& u, const std::function<double(const VectorXd&)>& logdens,
                   Rng& rng) {
    if (u.size() == 0) return;
    const double scale = 2.4 / std::sqrt(static_cast<double>(u.size()));
    double lp = logdens(u);
    VectorXd prop(u.size());
    for (int step = 0; step < n_steps; ++step) {
      for (int i = 0; i < u.size(); ++i) prop[i] = u[i] + scale * rng.gaussian();
      const double lp_prop = logdens(prop);
      if (std::log(rng.uniform()) < lp_prop - lp) {
        u = prop;
        lp = lp_prop;
      }
    }
  };
}

void step_theta_generic(const PriorSpec& prior, const QuasiLikelihood& ql,
                        ModelState& state, const InnerKernel& inner_kernel, Rng& rng) {
  const int p = state.delta.size();
  const double spike_sd = 1.0 / std::sqrt(prior.rho0);
  for (int j = 0; j < p; ++j)
    if (!state.delta.get(j)) state.theta[j] = spike_sd * rng.gaussian();

  const auto active = state.delta.active_indices();
  if (active.empty()) return;

  VectorXd u(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) u[a] = state.theta[active[a]];

  const BinaryModel& delta = state.delta;
  VectorXd full = state.theta;
  auto logdens = [&](const VectorXd& v) {
    for (std::size_t a = 0; a < active.size(); ++a) full[active[a]] = v[a];
    return ql.loglik(delta, full) - 0.5 * prior.rho1 * v.squaredNorm();
  };
  inner_kernel(u, logdens, rng);
  for (std::size_t a = 0; a < active.size(); ++a) state.theta[active[a]] = u[a];
}

void step_theta_linear(const PriorSpec& prior, const GaussianRegressionQL& ql,
                       ModelState& state, Rng& rng) {
  const int p = state.delta.size();
  const double spike_sd = 1.0 / std::sqrt(prior.rho0);
  for (int j = 0; j < p; ++j)
    if (!state.delta.get(j)) state.theta[j] = spike_sd * rng.gaussian();

  const auto active = state.delta.active_indices();
  const int s = static_cast<int>(active.size());
  if (s == 0) return;

  MatrixXd A(s, s);
  VectorXd b(s);
  for (int a = 0; a < s; ++a) {
    b[a] = ql.xty()[active[a]];
    for (int c = 0; c <= a; ++c) {
      const double v = ql.col_dot(active[a], active[c]);
      A(a, c) = v;
      A(c, a) = v;
    }
    A(a, a) += ql.sigma2() * prior.rho1;
  }

  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    // jitter guards pathological duplicated columns; sigma^2 rho1 already
    // regularizes the generic case
    A.diagonal().array() += 1e-10 * A.trace() / s;
    llt.compute(A);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("step_theta_linear: Cholesky failed at |delta|=" +
                               std::to_string(s));
  }

  const VectorXd m = llt.solve(b);
  VectorXd z(s);
  for (int a = 0; a < s; ++a) z[a] = rng.gaussian();
  // Sigma = sigma^2 A^{-1} = sigma^2 (LL')^{-1}; draw = m + sigma L'^{-1} z
  const VectorXd noise =
      llt.matrixU().solve(z) * std::sqrt(ql.sigma2());
  for (int a = 0; a < s; ++a) state.theta[active[a]] = m[a] + noise[a];
}

namespace {

// Fast per-coordinate flip sweep for the Gaussian model: the likelihood
// term of log A_j is formed from precomputed inner products over the
// current active set, O(s) per coordinate.
void step_delta_gaussian(const PriorSpec& prior, const GaussianRegressionQL& ql,
                         ModelState& state, const SamplerConfig& config, Rng& rng,
                         std::vector<long>* flip_accepts) {
  const int p = state.delta.size();
  const double log_h = config.lazy_half ? std::log(0.5) : 0.0;
  const double prior_part = prior.log_q_ratio() + 0.5 * std::log(prior.rho1 / prior.rho0);
  std::vector<int> active = state.delta.active_indices();

  for (int j = 0; j < p; ++j) {
    const bool iota = rng.bernoulli(0.5);
    const bool dj = state.delta.get(j);
    if (dj == iota) continue;

    const bool proposing_add = !dj;
    if (proposing_add && config.cap && state.delta.active_count() >= *config.cap)
      continue;

    const double tj = state.theta[j];
    double cross = 0.0;
    for (int i : active)
      if (i != j) cross += state.theta[i] * ql.col_dot(j, i);
    const double ll_delta =
        -tj * tj * ql.col_sq_norms()[j] / (2.0 * ql.sigma2()) +
        tj / ql.sigma2() * (ql.xty()[j] - cross);
    double log_a = prior_part - 0.5 * (prior.rho1 - prior.rho0) * tj * tj + ll_delta;
    if (!proposing_add) log_a = -log_a;

    const double log_accept = std::min(0.0, log_a) + log_h;
    if (std::log(rng.uniform()) < log_accept) {
      state.delta.set(j, iota);
      if (iota) {
        active.insert(std::lower_bound(active.begin(), active.end(), j), j);
      } else {
        active.erase(std::lower_bound(active.begin(), active.end(), j));
      }
      if (flip_accepts) ++(*flip_accepts)[j];
    }
  }
}

}  // namespace

void step_delta(const PriorSpec& prior, const QuasiLikelihood& ql, ModelState& state,
                const SamplerConfig& config, Rng& rng,
                std::vector<long>* flip_accepts) {
  if (const auto* gql = dynamic_cast<const GaussianRegressionQL*>(&ql)) {
    step_delta_gaussian(prior, *gql, state, config, rng, flip_accepts);
    return;
  }
  const int p = state.delta.size();
  const double log_h = config.lazy_half ? std::log(0.5) : 0.0;
  for (int j = 0; j < p; ++j) {
    const bool iota = rng.bernoulli(0.5);
    const bool dj = state.delta.get(j);
    if (dj == iota) continue;
    const bool proposing_add = !dj;
    if (proposing_add && config.cap && state.delta.active_count() >= *config.cap)
      continue;
    double log_a = flip_ratio(prior, ql, state, j);
    if (!proposing_add) log_a = -log_a;
    if (std::log(rng.uniform()) < std::min(0.0, log_a) + log_h) {
      state.delta.set(j, iota);
      if (flip_accepts) ++(*flip_accepts)[j];
    }
  }
}

Trace run_chain(const PriorSpec& prior, const QuasiLikelihood& ql,
                const ModelState& init, const SamplerConfig& config) {
  config.validate();
  if (!prior.in_support(init.delta))
    throw std::invalid_argument("run_chain: initial state outside prior support");

  Rng rng(config.seed);
  ModelState state = init;
  const auto* gql = dynamic_cast<const GaussianRegressionQL*>(&ql);
  const InnerKernel generic_kernel = random_walk_kernel();

  Trace trace;
  trace.n_iter = config.n_iter;
  trace.flip_accepts.assign(state.delta.size(), 0);
  const int kept = (config.n_iter - config.burn_in) / config.thin;
  trace.delta_samples.reserve(kept);
  trace.theta_samples.reserve(kept);

  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < config.n_iter; ++k) {
    if (gql)
      step_theta_linear(prior, *gql, state, rng);
    else
      step_theta_generic(prior, ql, state, generic_kernel, rng);
    step_delta(prior, ql, state, config, rng, &trace.flip_accepts);
    if (k >= config.burn_in && (k - config.burn_in) % config.thin == config.thin - 1) {
      trace.delta_samples.push_back(state.delta);
      trace.theta_samples.push_back(state.theta);
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  trace.seconds_total = std::chrono::duration<double>(t1 - t0).count();
  trace.seconds_per_iter = trace.seconds_total / config.n_iter;
  return trace;
}

}  // namespace qbss
