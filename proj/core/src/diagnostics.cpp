#include "qbss/diagnostics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "qbss/rng.hpp"

namespace qbss {

double gaussian_kl(const VectorXd& mu1, const MatrixXd& S1, const VectorXd& mu2,
                   const MatrixXd& S2) {
  const int p = static_cast<int>(mu1.size());
  if (mu2.size() != p || S1.rows() != p || S2.rows() != p || S1.cols() != p ||
      S2.cols() != p)
    throw std::invalid_argument("gaussian_kl: dimension mismatch");

  Eigen::LLT<MatrixXd> llt1(S1), llt2(S2);
  if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success)
    throw std::invalid_argument("gaussian_kl: covariance not positive definite");

  double logdet1 = 0.0, logdet2 = 0.0;
  for (int i = 0; i < p; ++i) {
    logdet1 += 2.0 * std::log(llt1.matrixL()(i, i));
    logdet2 += 2.0 * std::log(llt2.matrixL()(i, i));
  }
  const VectorXd d = mu2 - mu1;
  const double maha = d.dot(llt2.solve(d));
  const double trace = llt2.solve(S1).trace();
  return 0.5 * (maha + logdet2 - logdet1 + trace - p);
}

BvmLimit bvm_limit_from_fit(const GaussianRegressionQL& ql, const BinaryModel& delta_star,
                            const PriorSpec& prior) {
  const auto support = delta_star.active_indices();
  const int s = static_cast<int>(support.size());
  BvmLimit lim;
  lim.delta_star = delta_star;
  lim.rho0 = prior.rho0;
  if (s == 0) {
    lim.theta_hat = VectorXd();
    lim.info = MatrixXd();
    return lim;
  }
  MatrixXd xs(ql.n(), s);
  for (int a = 0; a < s; ++a) xs.col(a) = ql.X().col(support[a]);
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(xs);
  if (qr.rank() < s)
    throw std::runtime_error("bvm_limit_from_fit: active design is rank deficient");
  lim.theta_hat = qr.solve(ql.y());
  lim.info = xs.transpose() * xs / ql.sigma2();
  return lim;
}

KlEstimate kl_to_bvm(const Trace& trace, const BvmLimit& limit, const PriorSpec& prior,
                     const GaussianRegressionQL& ql, int n_draws, std::uint64_t seed) {
  const auto support = limit.delta_star.active_indices();
  const int s = static_cast<int>(support.size());
  const double rho1 = prior.rho1;
  const double hat_sq = s > 0 ? limit.theta_hat.squaredNorm() : 0.0;

  // For the Gaussian model the quasi-likelihood is exactly quadratic, so
  // R(delta_star, theta) = -(rho1/2)(||theta on support||^2 - ||theta_hat||^2).
  const auto neg_r = [&](double active_sq) {
    return 0.5 * rho1 * (active_sq - hat_sq);
  };

  // forward term E_limit[-R] by analytic draws from N(theta_hat, info^{-1})
  double fwd_mean = 0.0, fwd_m2 = 0.0;
  {
    Rng rng(seed);
    Eigen::LLT<MatrixXd> llt;
    if (s > 0) {
      llt.compute(limit.info);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("kl_to_bvm: info matrix not positive definite");
    }
    VectorXd z(s);
    for (int i = 0; i < n_draws; ++i) {
      double active_sq = 0.0;
      if (s > 0) {
        for (int a = 0; a < s; ++a) z[a] = rng.gaussian();
        const VectorXd draw = limit.theta_hat + llt.matrixU().solve(z);
        active_sq = draw.squaredNorm();
      }
      const double v = neg_r(active_sq);
      const double delta = v - fwd_mean;
      fwd_mean += delta / (i + 1);
      fwd_m2 += delta * (v - fwd_mean);
    }
  }
  const double fwd_var = fwd_m2 / std::max(1, n_draws - 1);

  // normalizer E_Pi[ e^{-R} 1{delta = delta_star} ] from the trace
  double w_mean = 0.0, w_m2 = 0.0;
  long hits = 0;
  {
    long i = 0;
    for (int k = 0; k < trace.size(); ++k) {
      double w = 0.0;
      if (trace.delta_samples[k] == limit.delta_star) {
        double active_sq = 0.0;
        for (int j : support) active_sq += trace.theta_samples[k][j] * trace.theta_samples[k][j];
        w = std::exp(neg_r(active_sq));
        ++hits;
      }
      const double delta = w - w_mean;
      w_mean += delta / (++i);
      w_m2 += delta * (w - w_mean);
    }
  }
  if (hits == 0)
    throw std::runtime_error(
        "kl_to_bvm: no visits to delta_star in the trace; run the chain longer");
  const long m = trace.size();
  const double w_var = w_m2 / std::max<long>(1, m - 1);

  KlEstimate out;
  out.estimate = fwd_mean - std::log(w_mean);
  // delta method for the log of the normalizer; trace autocorrelation is
  // ignored, so this is an optimistic s.e. for strongly mixing chains
  out.std_error =
      std::sqrt(fwd_var / n_draws + w_var / (m * w_mean * w_mean));
  return out;
}

double contraction_epsilon(int n, int sbar, int sstar, double sigma2, double vmin,
                           double rho_bar) {
  if (n <= 0 || sbar <= 0 || sstar < 0 || !(sigma2 > 0.0) || !(vmin > 0.0) ||
      !(rho_bar > 0.0))
    throw std::invalid_argument("contraction_epsilon: arguments must be positive");
  return 2.0 * sigma2 * std::sqrt(static_cast<double>(sbar + sstar)) * rho_bar /
         (n * vmin);
}

double ExactPosterior::prob(const BinaryModel& delta) const {
  unsigned mask = 0;
  for (int j = 0; j < delta.size(); ++j)
    if (delta.get(j)) mask |= (1u << j);
  return std::exp(log_probs[mask]);
}

ExactPosterior enumerate_exact(const PriorSpec& prior, const GaussianRegressionQL& ql) {
  const int p = ql.dim();
  if (p > 20) throw std::invalid_argument("enumerate_exact: p must be <= 20");

  const double sigma2 = ql.sigma2();
  const unsigned n_models = 1u << p;
  std::vector<double> logw(n_models, kLogZero);

  for (unsigned mask = 0; mask < n_models; ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < p; ++j)
      if (mask & (1u << j)) idx.push_back(j);
    const int s = static_cast<int>(idx.size());
    if (prior.cap && s > *prior.cap) continue;

    // log of integral over theta: active block integrates against the
    // conjugate Gaussian, inactive block integrates exactly to 1
    double val = s * prior.log_q + (p - s) * prior.log_1mq -
                 ql.yty() / (2.0 * sigma2) + 0.5 * s * std::log(prior.rho1);
    if (s > 0) {
      MatrixXd a(s, s);
      VectorXd b(s);
      for (int r = 0; r < s; ++r) {
        b[r] = ql.xty()[idx[r]] / sigma2;
        for (int c = 0; c <= r; ++c) {
          const double v = ql.col_dot(idx[r], idx[c]) / sigma2;
          a(r, c) = v;
          a(c, r) = v;
        }
        a(r, r) += prior.rho1;
      }
      Eigen::LLT<MatrixXd> llt(a);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("enumerate_exact: conjugate precision not PD");
      double logdet = 0.0;
      for (int i = 0; i < s; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
      val += -0.5 * logdet + 0.5 * b.dot(llt.solve(b));
    }
    logw[mask] = val;
  }

  const double mx = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double v : logw) total += std::exp(v - mx);
  const double log_norm = mx + std::log(total);

  ExactPosterior out;
  out.p = p;
  out.log_probs.resize(n_models);
  out.inclusion_probs = VectorXd::Zero(p);
  for (unsigned mask = 0; mask < n_models; ++mask) {
    out.log_probs[mask] = logw[mask] - log_norm;
    const double pr = std::exp(out.log_probs[mask]);
    for (int j = 0; j < p; ++j)
      if (mask & (1u << j)) out.inclusion_probs[j] += pr;
  }
  return out;
}

SelectionReport selection_report(const Trace& trace, const BinaryModel& truth) {
  if (trace.size() == 0)
    throw std::invalid_argument("selection_report: empty trace");
  const int p = truth.size();
  const int m = trace.size();

  SelectionReport rep;
  rep.inclusion_probs = VectorXd::Zero(p);
  std::vector<int> sizes(m);
  long true_hits = 0;
  for (int k = 0; k < m; ++k) {
    const auto& d = trace.delta_samples[k];
    for (int j = 0; j < p; ++j)
      if (d.get(j)) rep.inclusion_probs[j] += 1.0;
    sizes[k] = d.active_count();
    if (d == truth) ++true_hits;
  }
  rep.inclusion_probs /= m;
  rep.prob_true_model = static_cast<double>(true_hits) / m;

  std::sort(sizes.begin(), sizes.end());
  rep.median_model_size = (m % 2 == 1)
                              ? sizes[m / 2]
                              : 0.5 * (sizes[m / 2 - 1] + sizes[m / 2]);

  rep.mode_model = BinaryModel(p);
  for (int j = 0; j < p; ++j)
    if (rep.inclusion_probs[j] > 0.5) rep.mode_model.set(j, true);

  int selected = 0, false_pos = 0, missed = 0, true_total = 0;
  for (int j = 0; j < p; ++j) {
    const bool sel = rep.mode_model.get(j);
    const bool tr = truth.get(j);
    if (sel) ++selected;
    if (tr) ++true_total;
    if (sel && !tr) ++false_pos;
    if (!sel && tr) ++missed;
  }
  rep.fdr = selected > 0 ? static_cast<double>(false_pos) / selected : 0.0;
  rep.fnr = true_total > 0 ? static_cast<double>(missed) / true_total : 0.0;
  return rep;
}

}  // namespace qbss
