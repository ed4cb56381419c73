#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qbss/model.hpp"
#include "qbss/rng.hpp"

namespace qbss {

struct SamplerConfig {
  int n_iter = 1000;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thin = 1;
  // Algorithm as written stacks an extra 1/2 on top of the Ber(0.5)
  // proposal; both settings leave the target invariant.
  bool lazy_half = true;
  std::optional<int> cap;

  void validate() const {
    if (n_iter < 1) throw std::invalid_argument("SamplerConfig: n_iter >= 1");
    if (burn_in < 0 || burn_in >= n_iter)
      throw std::invalid_argument("SamplerConfig: need 0 <= burn_in < n_iter");
    if (thin < 1) throw std::invalid_argument("SamplerConfig: thin >= 1");
  }
};

struct Trace {
  std::vector<BinaryModel> delta_samples;
  std::vector<VectorXd> theta_samples;
  std::vector<long> flip_accepts;  // per-coordinate accepted flips
  double seconds_total = 0.0;
  double seconds_per_iter = 0.0;
  int n_iter = 0;

  int size() const { return static_cast<int>(delta_samples.size()); }
};

// log A_j of the per-coordinate independence-Metropolis flip; independent
// of the current delta_j.
double flip_ratio(const PriorSpec& prior, const QuasiLikelihood& ql,
                  const ModelState& state, int j);

// Kernel advancing the active block u given its unnormalized log density.
using InnerKernel =
    std::function<void(VectorXd& u, const std::function<double(const VectorXd&)>& logdens,
                       Rng& rng)>;

// Random-walk Metropolis default for the generic path (scale 2.4/sqrt(s)).
InnerKernel random_walk_kernel(int n_steps = 1);

void step_theta_generic(const PriorSpec& prior, const QuasiLikelihood& ql,
                        ModelState& state, const InnerKernel& inner_kernel, Rng& rng);

// Exact conditional draw for the Gaussian regression model:
// [theta]_delta ~ N(m, Sigma) with m = (X'X + sigma^2 rho1 I)^{-1} X'y.
void step_theta_linear(const PriorSpec& prior, const GaussianRegressionQL& ql,
                       ModelState& state, Rng& rng);

// Sequential Metropolized-Gibbs sweep over delta; uses the partially
// updated delta within the sweep. flip_accepts, when non-null, tallies
// accepted flips per coordinate.
void step_delta(const PriorSpec& prior, const QuasiLikelihood& ql, ModelState& state,
                const SamplerConfig& config, Rng& rng,
                std::vector<long>* flip_accepts = nullptr);

Trace run_chain(const PriorSpec& prior, const QuasiLikelihood& ql,
                const ModelState& init, const SamplerConfig& config);

// Coordinate-descent lasso on (1/2n)||y - X theta||^2 + lambda ||theta||_1.
// Returns the solution with delta = its support.
ModelState lasso_init(const GaussianRegressionQL& ql, double lambda,
                      int max_sweeps = 10000, double tol = 1e-7);

// Universal-threshold default penalty sigma * sqrt(2 log(p) / n).
double default_lasso_lambda(const GaussianRegressionQL& ql);

}  // namespace qbss
