#include "qbss/spca.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace qbss {

PcResponse pc_response(const MatrixXd& X) {
  if (X.size() == 0 || X.norm() == 0.0)
    throw std::invalid_argument("pc_response: X must be non-zero");

  // one-sided decomposition on the thinner dimension
  Eigen::BDCSVD<MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();

  PcResponse out;
  out.v1 = svd.matrixV().col(0);
  out.y = sv[0] * svd.matrixU().col(0);
  if (sv.size() > 1 && sv[0] > 0.0 &&
      (sv[0] - sv[1]) / sv[0] < 1e-10)
    out.tied_leading = true;

  // sign convention: largest-magnitude entry of v1 positive
  int imax = 0;
  out.v1.cwiseAbs().maxCoeff(&imax);
  if (out.v1[imax] < 0.0) {
    out.v1 = -out.v1;
    out.y = -out.y;
  }
  return out;
}

double projection_error(const VectorXd& theta, const VectorXd& theta_star) {
  const double nt = theta.norm();
  const double ns = theta_star.norm();
  if (nt == 0.0 || ns == 0.0)
    throw std::invalid_argument("projection_error: zero vector");
  const double c = theta.dot(theta_star) / (nt * ns);
  // eigenvalues of the rank-<=2 difference of unit projectors on the
  // 2-d invariant subspace are +-sqrt(1 - c^2)
  const double c2 = std::min(1.0, c * c);
  return std::sqrt(1.0 - c2);
}

SpcaFit fit_spca(const MatrixXd& X, const PriorSpec& prior, double sigma2,
                 const SamplerConfig& config, const VectorXd* theta_star) {
  if (!prior.cap)
    throw std::invalid_argument("fit_spca: prior must carry a model-size cap");

  SpcaFit fit;
  const PcResponse pc = pc_response(X);
  fit.v1 = pc.v1;

  const GaussianRegressionQL ql(X, pc.y, sigma2);
  ModelState init = lasso_init(ql, default_lasso_lambda(ql));
  if (prior.cap && init.delta.active_count() > *prior.cap) {
    // shrink the lasso support to the cap, keeping the largest coefficients
    std::vector<int> active = init.delta.active_indices();
    std::sort(active.begin(), active.end(), [&](int a, int b) {
      return std::abs(init.theta[a]) > std::abs(init.theta[b]);
    });
    for (std::size_t k = *prior.cap; k < active.size(); ++k) {
      init.delta.set(active[k], false);
      init.theta[active[k]] = 0.0;
    }
  }

  SamplerConfig cfg = config;
  cfg.cap = prior.cap;
  fit.trace = run_chain(prior, ql, init, cfg);

  // the component estimand is the sparse draw theta_delta: inactive
  // coordinates are pure spike noise and would otherwise dominate the
  // normalized direction when p - s is large
  for (int k = 0; k < fit.trace.size(); ++k) {
    VectorXd& theta = fit.trace.theta_samples[k];
    for (int j = 0; j < ql.dim(); ++j)
      if (!fit.trace.delta_samples[k].get(j)) theta[j] = 0.0;
    const double norm = theta.norm();
    if (norm > 0.0) theta /= norm;
  }

  VectorXd mean_dir = VectorXd::Zero(ql.dim());
  for (const auto& theta : fit.trace.theta_samples) mean_dir += theta;
  if (fit.trace.size() > 0) mean_dir /= fit.trace.size();
  fit.sign = mean_dir.dot(fit.v1) >= 0.0 ? 1 : -1;

  if (theta_star) {
    fit.proj_error_samples.reserve(fit.trace.size());
    for (const auto& theta : fit.trace.theta_samples)
      fit.proj_error_samples.push_back(
          theta.norm() == 0.0 ? 1.0 : projection_error(theta, *theta_star));
  }
  return fit;
}

}  // namespace qbss
