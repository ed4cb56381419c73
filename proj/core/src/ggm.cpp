#include "qbss/ggm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

namespace qbss {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t node) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (node + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PriorSpec node_prior(const GgmSettings& s, int p, int n) {
  const double rho1 = s.rho1 > 0.0 ? s.rho1 : std::sqrt(std::log(static_cast<double>(p)) / n);
  const double rho0 = s.rho0_inv > 0.0 ? 1.0 / s.rho0_inv : 4.0 * n;
  return PriorSpec::make(rho0, rho1, s.u, p);
}

// Template of the requested size: the lasso support first, then the
// covariates most correlated with the response.
SparsityTemplate build_template(const GaussianRegressionQL& ql,
                                const BinaryModel& lasso_support, int size) {
  const int p = ql.dim();
  size = std::min(size, p);
  BinaryModel tmpl(p);
  for (int j = 0; j < p && tmpl.active_count() < size; ++j)
    if (lasso_support.get(j)) tmpl.set(j, true);
  if (tmpl.active_count() < size) {
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(ql.xty()[a]) > std::abs(ql.xty()[b]);
    });
    for (int j : order) {
      if (tmpl.active_count() >= size) break;
      tmpl.set(j, true);
    }
  }
  return {tmpl};
}

}  // namespace

PosteriorSummary node_regression(const MatrixXd& Z, int j, const GgmSettings& settings) {
  const int n = static_cast<int>(Z.rows());
  const int p = static_cast<int>(Z.cols()) - 1;
  if (j < 0 || j > p) throw std::out_of_range("node_regression: node index out of range");
  if (n < 2) throw std::invalid_argument("node_regression: need n >= 2");

  VectorXd y = Z.col(j);
  const double mean_y = y.mean();
  if ((y.array() - mean_y).abs().maxCoeff() == 0.0)
    throw std::invalid_argument("node_regression: column " + std::to_string(j) +
                                " is constant");

  MatrixXd X(n, p);
  int c = 0;
  for (int k = 0; k <= p; ++k)
    if (k != j) X.col(c++) = Z.col(k);

  const GaussianRegressionQL ql(std::move(X), std::move(y), settings.sigma2);
  const PriorSpec prior = node_prior(settings, p, n);
  const ModelState init = lasso_init(ql, default_lasso_lambda(ql));

  PosteriorSummary sum;
  if (settings.method == Method::mcmc) {
    SamplerConfig cfg;
    cfg.n_iter = settings.n_iter;
    cfg.burn_in = settings.burn_in >= 0 ? settings.burn_in : settings.n_iter / 2;
    cfg.thin = settings.thin;
    cfg.seed = settings.seed;
    const Trace trace = run_chain(prior, ql, init, cfg);
    const int m = trace.size();
    sum.inclusion_probs = VectorXd::Zero(p);
    sum.theta_mean = VectorXd::Zero(p);
    sum.theta_var = VectorXd::Zero(p);
    std::vector<int> sizes(m);
    for (int k = 0; k < m; ++k) {
      for (int a = 0; a < p; ++a) {
        if (trace.delta_samples[k].get(a)) sum.inclusion_probs[a] += 1.0;
        sum.theta_mean[a] += trace.theta_samples[k][a];
      }
      sizes[k] = trace.delta_samples[k].active_count();
    }
    sum.inclusion_probs /= m;
    sum.theta_mean /= m;
    for (int k = 0; k < m; ++k)
      for (int a = 0; a < p; ++a) {
        const double d = trace.theta_samples[k][a] - sum.theta_mean[a];
        sum.theta_var[a] += d * d;
      }
    sum.theta_var /= std::max(1, m - 1);
    std::sort(sizes.begin(), sizes.end());
    sum.median_model_size =
        (m % 2 == 1) ? sizes[m / 2] : 0.5 * (sizes[m / 2 - 1] + sizes[m / 2]);
    sum.iterations = settings.n_iter;
  } else {
    SparsityTemplate tmpl = SparsityTemplate::skinny(p);
    if (settings.method == Method::full)
      tmpl = SparsityTemplate::full(p);
    else if (settings.method == Method::midsize)
      tmpl = build_template(ql, init.delta, settings.template_size);
    const VariationalState va0 = make_cavi_init(prior, ql, tmpl, init.delta, init.theta);
    const CaviResult res =
        run_cavi(prior, ql, tmpl, va0, settings.cavi_max_iter, settings.cavi_tol);
    sum.inclusion_probs = res.state.alpha;
    sum.theta_mean = res.state.mu;
    sum.theta_var = res.state.c_diag;
    double expected_size = res.state.alpha.sum();
    sum.median_model_size = expected_size;
    sum.iterations = res.iterations;
  }
  return sum;
}

GgmFit fit_ggm(const MatrixXd& Z, const GgmSettings& settings) {
  const int d = static_cast<int>(Z.cols());
  GgmFit fit;
  fit.node_fits.resize(d);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error_msg;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= d || failed.load()) return;
      try {
        GgmSettings node_settings = settings;
        node_settings.seed = mix_seed(settings.seed, static_cast<std::uint64_t>(j));
        fit.node_fits[j] = node_regression(Z, j, node_settings);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        failed.store(true);
        if (error_msg.empty())
          error_msg = "fit_ggm: node " + std::to_string(j) + " failed: " + e.what();
        return;
      }
    }
  };

  const int n_workers = std::max(1, settings.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error(error_msg);

  fit.edge_probs = MatrixXd::Zero(d, d);
  fit.precision_estimate = MatrixXd::Zero(d, d);
  VectorXd diag = settings.diag_precision ? *settings.diag_precision
                                          : VectorXd::Ones(d);
  if (diag.size() != d)
    throw std::invalid_argument("fit_ggm: diag_precision length mismatch");

  for (int j = 0; j < d; ++j) {
    fit.precision_estimate(j, j) = diag[j];
    for (int i = 0; i < d; ++i) {
      if (i == j) continue;
      const int col = i < j ? i : i - 1;  // covariate index of variable i in node j
      fit.precision_estimate(i, j) = -diag[j] * fit.node_fits[j].theta_mean[col];
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double pij = fit.node_fits[j].inclusion_probs[i < j ? i : i - 1];
      const double pji = fit.node_fits[i].inclusion_probs[j < i ? j : j - 1];
      double combined = 0.0;
      switch (settings.edge_rule) {
        case EdgeRule::max_rule: combined = std::max(pij, pji); break;
        case EdgeRule::min_rule: combined = std::min(pij, pji); break;
        case EdgeRule::mean_rule: combined = 0.5 * (pij + pji); break;
      }
      fit.edge_probs(i, j) = combined;
      fit.edge_probs(j, i) = combined;
    }
  }
  return fit;
}

}  // namespace qbss
