#include "qbss/model.hpp"

#include <cmath>

namespace qbss {

PriorSpec PriorSpec::make(double rho0, double rho1, double u, int p,
                          std::optional<int> cap) {
  if (p < 1) throw std::invalid_argument("PriorSpec: p must be >= 1");
  if (!(rho0 > 0.0) || !(rho1 > 0.0))
    throw std::invalid_argument("PriorSpec: precisions must be positive");
  if (rho0 < rho1)
    throw std::invalid_argument("PriorSpec: spike must be at least as tight as the slab");
  if (!(u > 0.0)) throw std::invalid_argument("PriorSpec: u must be positive");
  if (cap && (*cap < 1 || *cap > p))
    throw std::invalid_argument("PriorSpec: cap out of range");
  PriorSpec s;
  s.rho0 = rho0;
  s.rho1 = rho1;
  s.u = u;
  s.p = p;
  s.cap = cap;
  // q/(1-q) = p^{-(u+1)}
  const double log_ratio = -(u + 1.0) * std::log(static_cast<double>(p));
  s.log_1mq = -std::log1p(std::exp(log_ratio));
  s.log_q = log_ratio + s.log_1mq;
  return s;
}

GaussianRegressionQL::GaussianRegressionQL(MatrixXd X, VectorXd y, double sigma2,
                                           int gram_threshold)
    : X_(std::move(X)), y_(std::move(y)), sigma2_(sigma2) {
  if (X_.rows() != y_.size())
    throw std::invalid_argument("GaussianRegressionQL: X rows must match y length");
  if (!(sigma2_ > 0.0))
    throw std::invalid_argument("GaussianRegressionQL: sigma2 must be positive");
  xty_ = X_.transpose() * y_;
  col_sq_norms_ = X_.colwise().squaredNorm();
  yty_ = y_.squaredNorm();
  if (X_.cols() <= gram_threshold) {
    gram_ = X_.transpose() * X_;
  }
}

double GaussianRegressionQL::loglik(const BinaryModel& delta,
                                    const VectorXd& theta) const {
  if (delta.size() != dim() || theta.size() != dim())
    throw std::invalid_argument("loglik: dimension mismatch");
  // ||y - X theta_delta||^2 = y'y - 2 sum_j t_j <X_j,y> + sum_jk t_j t_k <X_j,X_k>
  // over active coordinates only; O(n s) without the Gram matrix, O(s^2) with it.
  const auto active = delta.active_indices();
  double quad;
  if (gram_) {
    double lin = 0.0, q = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const int j = active[a];
      lin += theta[j] * xty_[j];
      for (std::size_t b = 0; b < active.size(); ++b)
        q += theta[j] * theta[active[b]] * (*gram_)(j, active[b]);
    }
    quad = yty_ - 2.0 * lin + q;
  } else {
    VectorXd r = y_;
    for (int j : active) r -= theta[j] * X_.col(j);
    quad = r.squaredNorm();
  }
  return -quad / (2.0 * sigma2_);
}

double GaussianRegressionQL::coordinate_delta(const BinaryModel& delta,
                                              const VectorXd& theta, int j) const {
  if (j < 0 || j >= dim())
    throw std::out_of_range("coordinate_delta: index out of range");
  const double tj = theta[j];
  if (tj == 0.0) return 0.0;
  double cross = 0.0;
  for (int i = 0; i < dim(); ++i) {
    if (i != j && delta.get(i) && theta[i] != 0.0) cross += theta[i] * col_dot(j, i);
  }
  return -tj * tj * col_sq_norms_[j] / (2.0 * sigma2_) +
         tj / sigma2_ * (xty_[j] - cross);
}

double log_prior(const BinaryModel& delta, const VectorXd& theta,
                 const PriorSpec& prior) {
  if (delta.size() != prior.p || theta.size() != prior.p)
    throw std::invalid_argument("log_prior: dimension mismatch");
  if (!theta.allFinite())
    throw std::invalid_argument("log_prior: theta has non-finite entries");
  if (!prior.in_support(delta)) return kLogZero;

  constexpr double log_2pi = 1.8378770664093454835606594728112;
  const int s = delta.active_count();
  double slab_sq = 0.0, spike_sq = 0.0;
  for (int j = 0; j < prior.p; ++j) {
    const double t2 = theta[j] * theta[j];
    if (delta.get(j))
      slab_sq += t2;
    else
      spike_sq += t2;
  }
  return s * prior.log_q + (prior.p - s) * prior.log_1mq +
         0.5 * s * (std::log(prior.rho1) - log_2pi) +
         0.5 * (prior.p - s) * (std::log(prior.rho0) - log_2pi) -
         0.5 * prior.rho1 * slab_sq - 0.5 * prior.rho0 * spike_sq;
}

double sparsified_loglik(const QuasiLikelihood& ql, const BinaryModel& delta,
                         const VectorXd& theta) {
  return ql.loglik(delta, theta);
}

double loglik_coordinate_delta(const QuasiLikelihood& ql, const BinaryModel& delta,
                               const VectorXd& theta, int j) {
  return ql.coordinate_delta(delta, theta, j);
}

}  // namespace qbss
