#pragma once

#include <Eigen/Core>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qbss {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Sentinel for points outside the prior support. All acceptance ratios
// treat it as certain rejection.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Binary inclusion vector with a cached population count.
class BinaryModel {
 public:
  BinaryModel() = default;
  explicit BinaryModel(int p) : bits_(p, 0) {}

  static BinaryModel zeros(int p) { return BinaryModel(p); }
  static BinaryModel ones(int p) {
    BinaryModel d(p);
    for (int j = 0; j < p; ++j) d.set(j, true);
    return d;
  }
  static BinaryModel from_indices(int p, const std::vector<int>& idx) {
    BinaryModel d(p);
    for (int j : idx) d.set(j, true);
    return d;
  }

  int size() const { return static_cast<int>(bits_.size()); }
  int active_count() const { return active_count_; }
  bool get(int j) const { return bits_[j] != 0; }

  void set(int j, bool v) {
    if (bits_[j] != static_cast<std::uint8_t>(v)) {
      active_count_ += v ? 1 : -1;
      bits_[j] = v ? 1 : 0;
    }
  }

  std::vector<int> active_indices() const {
    std::vector<int> idx;
    idx.reserve(active_count_);
    for (int j = 0; j < size(); ++j)
      if (bits_[j]) idx.push_back(j);
    return idx;
  }

  bool operator==(const BinaryModel& o) const { return bits_ == o.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
  int active_count_ = 0;
};

// Spike/slab precisions and the Bernoulli inclusion prior of the
// hierarchical model: q/(1-q) = p^{-(u+1)}, optionally capped at s_bar.
struct PriorSpec {
  double rho0 = 0.0;  // spike precision (tight)
  double rho1 = 0.0;  // slab precision (diffuse)
  double u = 2.0;     // sparsity exponent
  int p = 0;
  std::optional<int> cap;

  double log_q = 0.0;    // log q
  double log_1mq = 0.0;  // log(1-q)

  static PriorSpec make(double rho0, double rho1, double u, int p,
                        std::optional<int> cap = std::nullopt);

  // log(q/(1-q)) = -(u+1) log p
  double log_q_ratio() const { return log_q - log_1mq; }

  bool in_support(const BinaryModel& delta) const {
    return !cap || delta.active_count() <= *cap;
  }
};

struct ModelState {
  BinaryModel delta;
  VectorXd theta;
};

// Log quasi-likelihood interface. Implementations are immutable after
// construction and shareable across threads.
class QuasiLikelihood {
 public:
  virtual ~QuasiLikelihood() = default;
  virtual int dim() const = 0;
  // ell(theta_delta; z)
  virtual double loglik(const BinaryModel& delta, const VectorXd& theta) const = 0;
  // ell(theta_delta with delta_j=1) - ell(theta_delta with delta_j=0),
  // all coordinates other than j held at theta_delta.
  virtual double coordinate_delta(const BinaryModel& delta, const VectorXd& theta,
                                  int j) const = 0;
};

// Gaussian least-squares quasi-likelihood -||y - X theta_delta||^2 / (2 sigma^2).
class GaussianRegressionQL : public QuasiLikelihood {
 public:
  // The Gram matrix is precomputed when p <= gram_threshold; otherwise
  // column inner products are formed on demand over the active set.
  GaussianRegressionQL(MatrixXd X, VectorXd y, double sigma2,
                       int gram_threshold = 8192);

  int dim() const override { return static_cast<int>(X_.cols()); }
  int n() const { return static_cast<int>(X_.rows()); }
  double sigma2() const { return sigma2_; }
  const MatrixXd& X() const { return X_; }
  const VectorXd& y() const { return y_; }
  const VectorXd& xty() const { return xty_; }
  const VectorXd& col_sq_norms() const { return col_sq_norms_; }
  double yty() const { return yty_; }
  bool has_gram() const { return gram_.has_value(); }
  const MatrixXd& gram() const { return *gram_; }

  // <X_j, X_i>, from the Gram matrix when present.
  double col_dot(int j, int i) const {
    if (gram_) return (*gram_)(j, i);
    return X_.col(j).dot(X_.col(i));
  }

  double loglik(const BinaryModel& delta, const VectorXd& theta) const override;
  double coordinate_delta(const BinaryModel& delta, const VectorXd& theta,
                          int j) const override;

 private:
  MatrixXd X_;
  VectorXd y_;
  double sigma2_;
  std::optional<MatrixXd> gram_;
  VectorXd xty_;
  VectorXd col_sq_norms_;
  double yty_;
};

// Unnormalized log prior of (delta, theta): Bernoulli model weight plus the
// spike/slab Gaussian log densities with their normalizing constants.
// Returns kLogZero when a cap is present and violated.
double log_prior(const BinaryModel& delta, const VectorXd& theta,
                 const PriorSpec& prior);

double sparsified_loglik(const QuasiLikelihood& ql, const BinaryModel& delta,
                         const VectorXd& theta);

double loglik_coordinate_delta(const QuasiLikelihood& ql, const BinaryModel& delta,
                               const VectorXd& theta, int j);

}  // namespace qbss
