#pragma once

#include <optional>
#include <vector>

#include "qbss/model.hpp"
#include "qbss/sampler.hpp"
#include "qbss/simulate.hpp"
#include "qbss/varapprox.hpp"

namespace qbss {

// Per-node marginal summaries, from a chain or a variational fit.
struct PosteriorSummary {
  VectorXd inclusion_probs;
  VectorXd theta_mean;
  VectorXd theta_var;
  double median_model_size = 0.0;
  int iterations = 0;
};

enum class EdgeRule { max_rule, min_rule, mean_rule };

struct GgmSettings {
  Method method = Method::mcmc;
  int n_iter = 5000;
  int burn_in = -1;  // -1 = n_iter / 2
  int thin = 1;
  std::uint64_t seed = 0;
  int cavi_max_iter = 50;
  double cavi_tol = 1e-8;
  int template_size = 100;
  // per-node prior defaults: sigma2 = 1, rho1 = sqrt(log p / n),
  // rho0^{-1} = 1/(4n), u = 2 (0 = use default)
  double sigma2 = 1.0;
  double u = 2.0;
  double rho1 = 0.0;
  double rho0_inv = 0.0;
  EdgeRule edge_rule = EdgeRule::max_rule;
  int workers = 1;
  // diagonal of the precision matrix, assumed known; defaults to 1
  std::optional<VectorXd> diag_precision;
};

struct GgmFit {
  std::vector<PosteriorSummary> node_fits;
  MatrixXd edge_probs;          // symmetric, zero diagonal
  MatrixXd precision_estimate;  // column j from the node-j regression
};

// Regresses column j of Z (0-based) on the remaining columns under the
// spike-and-slab quasi-posterior, by the chosen method.
PosteriorSummary node_regression(const MatrixXd& Z, int j, const GgmSettings& settings);

GgmFit fit_ggm(const MatrixXd& Z, const GgmSettings& settings);

}  // namespace qbss
