#include <cmath>

#include "qbss/sampler.hpp"

namespace qbss {

namespace {
double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}
}  // namespace

double default_lasso_lambda(const GaussianRegressionQL& ql) {
  return std::sqrt(ql.sigma2()) *
         std::sqrt(2.0 * std::log(static_cast<double>(ql.dim())) / ql.n());
}

ModelState lasso_init(const GaussianRegressionQL& ql, double lambda, int max_sweeps,
                      double tol) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lasso_init: lambda must be > 0");
  const int p = ql.dim();
  const int n = ql.n();
  VectorXd theta = VectorXd::Zero(p);
  VectorXd residual = ql.y();

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      const double norm_j = ql.col_sq_norms()[j] / n;
      if (norm_j == 0.0) continue;
      const double old = theta[j];
      // partial residual correlation with coordinate j
      const double rho = ql.X().col(j).dot(residual) / n + norm_j * old;
      const double updated = soft_threshold(rho, lambda) / norm_j;
      if (updated != old) {
        residual -= (updated - old) * ql.X().col(j);
        theta[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    converged = max_change < tol;
  }
  if (!converged)
    throw std::runtime_error("lasso_init: no convergence after max sweeps");

  ModelState state;
  state.delta = BinaryModel(p);
  for (int j = 0; j < p; ++j)
    if (theta[j] != 0.0) state.delta.set(j, true);
  state.theta = theta;
  return state;
}

}  // namespace qbss
