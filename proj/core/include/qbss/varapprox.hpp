#pragma once

#include <vector>

#include "qbss/model.hpp"

namespace qbss {

// Template delta^(i) defining which covariance off-diagonals the Gaussian
// factor may use: pattern S_ij = 1 if i=j, else tmpl_i * tmpl_j.
struct SparsityTemplate {
  BinaryModel tmpl;

  static SparsityTemplate skinny(int p) { return {BinaryModel::zeros(p)}; }
  static SparsityTemplate full(int p) { return {BinaryModel::ones(p)}; }

  int p() const { return tmpl.size(); }
  bool pattern(int i, int j) const {
    return i == j || (tmpl.get(i) && tmpl.get(j));
  }
  std::vector<int> support() const { return tmpl.active_indices(); }
};

// Variational parameters (alpha, mu, C). C is stored as a dense block over
// the template support plus a diagonal; off-pattern entries are exactly 0.
struct VariationalState {
  VectorXd alpha;
  VectorXd mu;
  VectorXd c_diag;            // C_jj for every j
  MatrixXd c_block;           // C over block_idx; diagonal mirrors c_diag
  std::vector<int> block_idx; // template support, ascending

  double cov(int i, int j) const;
  void clamp_alpha();
  void validate(int p) const;
};

inline constexpr double kAlphaClamp = 1e-12;

// Fresh state per the initialization convention: alpha 0.9 on the given
// support and q elsewhere, mu as supplied, C = (0.001/n) I.
VariationalState make_cavi_init(const PriorSpec& prior, const GaussianRegressionQL& ql,
                                const SparsityTemplate& tmpl, const BinaryModel& support,
                                const VectorXd& mu);

// Sequential sweep alpha_j = 1 / (1 + R_j), computed through log R_j.
void cavi_update_alpha(VariationalState& state, const PriorSpec& prior,
                       const GaussianRegressionQL& ql);

// Diagonal updates for template-out coordinates, joint block update for
// template-in coordinates.
void cavi_update_gaussian(VariationalState& state, const PriorSpec& prior,
                          const GaussianRegressionQL& ql, const SparsityTemplate& tmpl);

struct CaviResult {
  VariationalState state;
  int iterations = 0;
  bool converged = false;
};

CaviResult run_cavi(const PriorSpec& prior, const GaussianRegressionQL& ql,
                    const SparsityTemplate& tmpl, const VariationalState& init,
                    int max_iter = 50, double tol = 1e-8);

// Evidence lower bound for this conjugate family; convergence diagnostic
// and test oracle only.
double elbo(const VariationalState& state, const PriorSpec& prior,
            const GaussianRegressionQL& ql);

// KL penalty (x2) incurred by masking the limit precision to a pattern:
// zeta = log det(Ibar) - log det(S.Ibar) + Tr(Ibar^{-1} (S.Ibar)) - p,
// where Ibar is the info matrix on the support of delta_star and (1/gamma) I
// off-support. Always >= 0.
double zeta_gap(const MatrixXd& info, double gamma, const SparsityTemplate& tmpl,
                const BinaryModel& delta_star);

}  // namespace qbss
