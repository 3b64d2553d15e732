#pragma once

#include <functional>
#include <span>
#include <vector>

#include "varprune/model.hpp"
#include "varprune/param_set.hpp"
#include "varprune/rng.hpp"
#include "varprune/var_reg.hpp"

namespace varprune {

// Exact bin counts over strictly increasing edges. Bins are half-open
// [left, right) except the last, which also includes its right edge.
struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
};

// Population variance of all raw prunable weights pooled into one vector.
double model_variance(const ParamSet& params);

// Counts every prunable weight. Out-of-range values throw unless
// clamp_outliers sends them to the first/last bin.
Histogram weight_histogram(const ParamSet& params, std::vector<double> bin_edges,
                           bool clamp_outliers = false);

// Evenly spaced edges spanning [-m, m] with m = max |w| (or 1 when all
// weights are zero).
std::vector<double> symmetric_edges(const ParamSet& params, std::size_t bins);

using GradientFn = std::function<void(std::span<const double> w, std::span<double> grad_out)>;
using MatVecFn = std::function<void(std::span<const double> v, std::span<double> out)>;

// Central-difference Hessian-vector product of any gradient field:
//   H v ~= (grad(w + delta v) - grad(w - delta v)) / (2 delta).
// delta <= 0 selects max(1e-6, 1e-3 * |w| / |v|).
std::vector<double> hvp(const GradientFn& grad, std::span<const double> w,
                        std::span<const double> v, double delta);

struct SharpnessProbe {
  double delta = 0.0;          // 0 -> auto scaling
  std::size_t max_iters = 200;
  double tol = 1e-6;           // relative Rayleigh-quotient change
  bool include_regularizer = false;
};

struct EigenEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Power iteration with per-step normalization; returns the Rayleigh
// quotient of the final vector. Converges to the largest-magnitude
// eigenvalue of the symmetric operator.
EigenEstimate top_eigenvalue(const MatVecFn& matvec, std::size_t dim,
                             const SharpnessProbe& probe, RngState& rng);

// Hessian-vector product of the batch loss at the current parameters,
// evaluated through the analytic backprop gradients. Adds lambda * psi when
// reg is non-null.
std::vector<double> hvp(const Net& net, const ParamSet& params, const Batch& batch,
                        LossKind kind, std::span<const double> v, double delta,
                        const RegConfig* reg = nullptr);

// Largest Hessian eigenvalue of the batch loss (optionally + lambda psi).
EigenEstimate top_hessian_eigenvalue(const Net& net, const ParamSet& params,
                                     const Batch& batch, LossKind kind,
                                     const SharpnessProbe& probe, RngState& rng,
                                     const RegConfig* reg = nullptr);

// s_0 = x_0; s_t = gamma * s_{t-1} + (1 - gamma) * x_t.
std::vector<double> ema(std::span<const double> series, double gamma);

}  // namespace varprune
