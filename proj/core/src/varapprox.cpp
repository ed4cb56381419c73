#include "qbss/varapprox.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

namespace qbss {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp01(double a) {
  return std::min(1.0 - kAlphaClamp, std::max(kAlphaClamp, a));
}
}  // namespace

double VariationalState::cov(int i, int j) const {
  if (i == j) return c_diag[i];
  const auto pos = [&](int k) {
    const auto it = std::lower_bound(block_idx.begin(), block_idx.end(), k);
    return (it != block_idx.end() && *it == k)
               ? static_cast<int>(it - block_idx.begin())
               : -1;
  };
  const int pi = pos(i), pj = pos(j);
  if (pi < 0 || pj < 0) return 0.0;
  return c_block(pi, pj);
}

void VariationalState::clamp_alpha() {
  for (int j = 0; j < alpha.size(); ++j) alpha[j] = clamp01(alpha[j]);
}

void VariationalState::validate(int p) const {
  if (alpha.size() != p || mu.size() != p || c_diag.size() != p)
    throw std::invalid_argument("VariationalState: dimension mismatch");
  if (c_block.rows() != static_cast<int>(block_idx.size()))
    throw std::invalid_argument("VariationalState: block size mismatch");
}

VariationalState make_cavi_init(const PriorSpec& prior, const GaussianRegressionQL& ql,
                                const SparsityTemplate& tmpl, const BinaryModel& support,
                                const VectorXd& mu) {
  const int p = ql.dim();
  VariationalState st;
  st.alpha.resize(p);
  const double q = std::exp(prior.log_q);
  for (int j = 0; j < p; ++j) st.alpha[j] = support.get(j) ? 0.9 : q;
  st.clamp_alpha();
  st.mu = mu;
  const double c0 = 0.001 / ql.n();
  st.c_diag = VectorXd::Constant(p, c0);
  st.block_idx = tmpl.support();
  const int k = static_cast<int>(st.block_idx.size());
  st.c_block = MatrixXd::Identity(k, k) * c0;
  return st;
}

void cavi_update_alpha(VariationalState& state, const PriorSpec& prior,
                       const GaussianRegressionQL& ql) {
  const int p = ql.dim();
  state.validate(p);
  const double sigma2 = ql.sigma2();
  const double prior_part =
      -prior.log_q_ratio() + 0.5 * std::log(prior.rho0 / prior.rho1);

  // residual r = y - X (alpha . mu), updated as alpha changes in the sweep
  VectorXd r = ql.y() - ql.X() * state.alpha.cwiseProduct(state.mu).eval();

  std::vector<int> block_pos(p, -1);
  for (std::size_t a = 0; a < state.block_idx.size(); ++a)
    block_pos[state.block_idx[a]] = static_cast<int>(a);

  for (int j = 0; j < p; ++j) {
    const double mu_j = state.mu[j];
    const double theta2 = mu_j * mu_j + state.c_diag[j];
    // <X_j, y - sum_{i != j} alpha_i mu_i X_i>
    const double dot_rj =
        ql.X().col(j).dot(r) + state.alpha[j] * mu_j * ql.col_sq_norms()[j];

    double s_j = 0.0;
    if (block_pos[j] >= 0) {
      const int pj = block_pos[j];
      for (std::size_t a = 0; a < state.block_idx.size(); ++a) {
        const int i = state.block_idx[a];
        if (i == j) continue;
        s_j += state.alpha[i] * state.c_block(static_cast<int>(a), pj) *
               ql.col_dot(j, i);
      }
      s_j *= 2.0;
    }

    const double log_r = prior_part + 0.5 * (prior.rho1 - prior.rho0) * theta2 +
                         (theta2 * ql.col_sq_norms()[j] - 2.0 * mu_j * dot_rj + s_j) /
                             (2.0 * sigma2);
    const double new_alpha = clamp01(sigmoid(-log_r));
    const double d = new_alpha - state.alpha[j];
    if (d != 0.0) {
      r -= d * mu_j * ql.X().col(j);
      state.alpha[j] = new_alpha;
    }
  }
}

void cavi_update_gaussian(VariationalState& state, const PriorSpec& prior,
                          const GaussianRegressionQL& ql,
                          const SparsityTemplate& tmpl) {
  const int p = ql.dim();
  state.validate(p);
  if (tmpl.support() != state.block_idx)
    throw std::invalid_argument("cavi_update_gaussian: template does not match state layout");
  const double sigma2 = ql.sigma2();

  VectorXd r = ql.y() - ql.X() * state.alpha.cwiseProduct(state.mu).eval();

  // template-out coordinates: diagonal-only updates, sequential
  for (int j = 0; j < p; ++j) {
    if (tmpl.tmpl.get(j)) continue;
    const double aj = state.alpha[j];
    const double cjj =
        1.0 / ((prior.rho1 + ql.col_sq_norms()[j] / sigma2) * aj + prior.rho0 * (1.0 - aj));
    const double dot_rj = ql.X().col(j).dot(r) + aj * state.mu[j] * ql.col_sq_norms()[j];
    const double mu_new = cjj / sigma2 * aj * dot_rj;
    r -= aj * (mu_new - state.mu[j]) * ql.X().col(j);
    state.c_diag[j] = cjj;
    state.mu[j] = mu_new;
  }

  const int k = static_cast<int>(state.block_idx.size());
  if (k == 0) return;

  // template-in coordinates: joint update over the block
  // g = X_block' ytilde with ytilde = y - sum_{j out} alpha_j mu_j X_j
  VectorXd g(k);
  {
    VectorXd ytilde = ql.y();
    for (int j = 0; j < p; ++j)
      if (!tmpl.tmpl.get(j) && state.alpha[j] * state.mu[j] != 0.0)
        ytilde -= state.alpha[j] * state.mu[j] * ql.X().col(j);
    for (int a = 0; a < k; ++a) g[a] = ql.X().col(state.block_idx[a]).dot(ytilde);
  }

  MatrixXd A(k, k);
  for (int a = 0; a < k; ++a) {
    const int i = state.block_idx[a];
    const double ai = state.alpha[i];
    for (int c = 0; c < a; ++c) {
      const int j = state.block_idx[c];
      const double v = ai * state.alpha[j] * ql.col_dot(i, j) / sigma2;
      A(a, c) = v;
      A(c, a) = v;
    }
    A(a, a) = (ai * prior.rho1 + prior.rho0 * (1.0 - ai)) +
              ai * ql.col_sq_norms()[i] / sigma2;
  }

  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cavi_update_gaussian: block inversion failed at size " +
                             std::to_string(k));
  state.c_block = llt.solve(MatrixXd::Identity(k, k));
  VectorXd ag(k);
  for (int a = 0; a < k; ++a) ag[a] = state.alpha[state.block_idx[a]] * g[a] / sigma2;
  const VectorXd mu_block = state.c_block * ag;
  for (int a = 0; a < k; ++a) {
    state.mu[state.block_idx[a]] = mu_block[a];
    state.c_diag[state.block_idx[a]] = state.c_block(a, a);
  }
}

CaviResult run_cavi(const PriorSpec& prior, const GaussianRegressionQL& ql,
                    const SparsityTemplate& tmpl, const VariationalState& init,
                    int max_iter, double tol) {
  CaviResult res;
  res.state = init;
  res.state.validate(ql.dim());
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd alpha_prev = res.state.alpha;
    const VectorXd mu_prev = res.state.mu;
    cavi_update_alpha(res.state, prior, ql);
    cavi_update_gaussian(res.state, prior, ql, tmpl);
    res.iterations = it + 1;
    const double change =
        std::max((res.state.alpha - alpha_prev).cwiseAbs().maxCoeff(),
                 (res.state.mu - mu_prev).cwiseAbs().maxCoeff());
    if (change < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

double elbo(const VariationalState& state, const PriorSpec& prior,
            const GaussianRegressionQL& ql) {
  const int p = ql.dim();
  state.validate(p);
  const VectorXd& a = state.alpha;
  const VectorXd& mu = state.mu;

  // E[ ell(theta_delta) ]
  const VectorXd v = a.cwiseProduct(mu);
  double quad = 0.0;  // E sum_{jk} d_j d_k t_j t_k <X_j,X_k>
  if (ql.has_gram()) {
    quad = v.dot(ql.gram() * v);
  } else {
    quad = (ql.X() * v).squaredNorm();
  }
  for (int j = 0; j < p; ++j) {
    const double ex2 = mu[j] * mu[j] + state.c_diag[j];
    quad += a[j] * ex2 * ql.col_sq_norms()[j] - v[j] * v[j] * ql.col_sq_norms()[j];
  }
  const int k = static_cast<int>(state.block_idx.size());
  for (int bi = 0; bi < k; ++bi) {
    const int i = state.block_idx[bi];
    for (int bj = 0; bj < k; ++bj) {
      const int j = state.block_idx[bj];
      if (i == j) continue;
      quad += a[i] * a[j] * state.c_block(bi, bj) * ql.col_dot(i, j);
    }
  }
  double val = -(ql.yty() - 2.0 * v.dot(ql.xty()) + quad) / (2.0 * ql.sigma2());

  // E[ log prior(delta, theta) ]
  for (int j = 0; j < p; ++j) {
    const double ex2 = mu[j] * mu[j] + state.c_diag[j];
    val += a[j] * (prior.log_q + 0.5 * (std::log(prior.rho1) - kLog2Pi) -
                   0.5 * prior.rho1 * ex2) +
           (1.0 - a[j]) * (prior.log_1mq + 0.5 * (std::log(prior.rho0) - kLog2Pi) -
                           0.5 * prior.rho0 * ex2);
  }

  // entropy of Q
  for (int j = 0; j < p; ++j)
    val -= a[j] * std::log(a[j]) + (1.0 - a[j]) * std::log(1.0 - a[j]);
  double logdet_c = 0.0;
  std::vector<bool> in_block(p, false);
  for (int j : state.block_idx) in_block[j] = true;
  for (int j = 0; j < p; ++j)
    if (!in_block[j]) logdet_c += std::log(state.c_diag[j]);
  if (k > 0) {
    Eigen::LLT<MatrixXd> llt(state.c_block);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("elbo: covariance block not positive definite");
    for (int i = 0; i < k; ++i) logdet_c += 2.0 * std::log(llt.matrixL()(i, i));
  }
  val += 0.5 * (p * (kLog2Pi + 1.0) + logdet_c);
  return val;
}

double zeta_gap(const MatrixXd& info, double gamma, const SparsityTemplate& tmpl,
                const BinaryModel& delta_star) {
  const int p = delta_star.size();
  const auto support = delta_star.active_indices();
  const int s = static_cast<int>(support.size());
  if (info.rows() != s || info.cols() != s)
    throw std::invalid_argument("zeta_gap: info size must match |delta_star|");
  if (!(gamma > 0.0)) throw std::invalid_argument("zeta_gap: gamma must be positive");
  if (tmpl.p() != p) throw std::invalid_argument("zeta_gap: template size mismatch");

  MatrixXd ibar = MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) ibar(j, j) = 1.0 / gamma;
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b) ibar(support[a], support[b]) = info(a, b);

  MatrixXd masked = ibar;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (!tmpl.pattern(i, j)) masked(i, j) = 0.0;

  Eigen::LLT<MatrixXd> llt_full(ibar);
  if (llt_full.info() != Eigen::Success)
    throw std::invalid_argument("zeta_gap: info matrix not positive definite");
  Eigen::LLT<MatrixXd> llt_masked(masked);
  if (llt_masked.info() != Eigen::Success)
    throw std::runtime_error("zeta_gap: masked matrix not positive definite");

  double logdet_full = 0.0, logdet_masked = 0.0;
  for (int i = 0; i < p; ++i) {
    logdet_full += 2.0 * std::log(llt_full.matrixL()(i, i));
    logdet_masked += 2.0 * std::log(llt_masked.matrixL()(i, i));
  }
  const double trace_term = llt_full.solve(masked).trace();
  return logdet_full - logdet_masked + trace_term - p;
}

}  // namespace qbss
