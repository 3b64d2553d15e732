#pragma once

#include <functional>
#include <span>

#include "varprune/param_set.hpp"

namespace varprune {

// Variance-amplifying penalty. Each included parameter tensor, flattened as
// one layer, contributes one reciprocal term
//
//   psi_layer(w) = 1 / (Var(wt) + epsilon),   wt_i = sqrt(w_i^2 + r),
//
// with Var the population (1/n) variance of the smoothed magnitudes. Driving
// psi down spreads each layer's magnitudes apart. All internals run in
// double to keep the term stable when Var approaches epsilon.
struct RegConfig {
  double lambda = 0.0;
  double r = 1e-8;        // smoothing constant inside sqrt(w^2 + r); must be > 0
  double epsilon = 1e-8;  // stabilizer added to the layer variance; must be > 0

  // Which entries contribute a term. Unset means prunable entries only.
  std::function<bool(const ParamEntry&)> include;

  bool includes(const ParamEntry& e) const { return include ? include(e) : e.prunable; }
};

// sqrt(w^2 + r): even, >= |w|, >= sqrt(r), differentiable at 0 for r > 0.
double smoothed_abs(double w, double r);

double psi_layer(std::span<const double> weights, double r, double epsilon);

// d/dw_i of psi_layer:
//   -(2/n) * (wt_i - mean(wt)) * (w_i / wt_i) / (Var(wt) + epsilon)^2
// Exact gradient, including the degenerate Var == 0 case where it is zero.
void psi_layer_grad(std::span<const double> weights, double r, double epsilon,
                    std::span<double> grad_out);

// Sum of psi_layer over included entries. Throws ConfigError when the config
// includes no entry.
double psi(const ParamSet& params, const RegConfig& cfg);

// Per-entry gradient of psi; excluded entries get an empty vector.
PerEntryValues psi_grad(const ParamSet& params, const RegConfig& cfg);

}  // namespace varprune
