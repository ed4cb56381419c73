#pragma once

#include <vector>

#include "qbss/model.hpp"
#include "qbss/sampler.hpp"

namespace qbss {

struct PcResponse {
  VectorXd y;   // Lambda_11 U_1, sign-aligned with v1
  VectorXd v1;  // first right singular vector, largest-magnitude entry positive
  bool tied_leading = false;  // leading singular values within 1e-10 relative
};

// SVD-based response for the regression route to the first principal
// component; the identity y = X v1 holds exactly.
PcResponse pc_response(const MatrixXd& X);

struct SpcaFit {
  Trace trace;  // theta samples normalized to unit norm
  VectorXd v1;
  int sign = 1;  // alignment of the posterior mean direction against v1
  std::vector<double> proj_error_samples;  // filled when truth supplied
};

// Capped spike-and-slab regression of pc_response(X).y on X.
// prior.cap must be present.
SpcaFit fit_spca(const MatrixXd& X, const PriorSpec& prior, double sigma2,
                 const SamplerConfig& config, const VectorXd* theta_star = nullptr);

// Spectral norm of theta theta' - theta* theta*' for unit vectors;
// sign-invariant, in [0, 1].
double projection_error(const VectorXd& theta, const VectorXd& theta_star);

}  // namespace qbss
