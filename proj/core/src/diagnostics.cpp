#include "varprune/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "varprune/errors.hpp"

namespace varprune {

double model_variance(const ParamSet& params) {
  std::vector<float> pooled;
  pooled.reserve(params.prunable_values());
  for (const auto& e : params.entries)
    if (e.prunable) pooled.insert(pooled.end(), e.value.data.begin(), e.value.data.end());
  if (pooled.empty()) throw ConfigError("model_variance: no prunable weights");
  return population_variance(std::span<const float>(pooled));
}

Histogram weight_histogram(const ParamSet& params, std::vector<double> bin_edges,
                           bool clamp_outliers) {
  if (bin_edges.size() < 2) throw ConfigError("weight_histogram: need at least two edges");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i] > bin_edges[i - 1]))
      throw ConfigError("weight_histogram: edges must be strictly increasing");

  Histogram h;
  h.counts.assign(bin_edges.size() - 1, 0);
  for (const auto& e : params.entries) {
    if (!e.prunable) continue;
    for (float wf : e.value.data) {
      const double w = wf;
      if (w < bin_edges.front() || w > bin_edges.back()) {
        if (!clamp_outliers)
          throw ConfigError("weight_histogram: value outside edge range");
        ++h.counts[w < bin_edges.front() ? 0 : h.counts.size() - 1];
        continue;
      }
      // Last bin is closed on the right.
      auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), w);
      std::size_t bin = static_cast<std::size_t>(it - bin_edges.begin());
      bin = bin == 0 ? 0 : bin - 1;
      if (bin >= h.counts.size()) bin = h.counts.size() - 1;
      ++h.counts[bin];
    }
  }
  h.bin_edges = std::move(bin_edges);
  return h;
}

std::vector<double> symmetric_edges(const ParamSet& params, std::size_t bins) {
  if (bins == 0) throw ConfigError("symmetric_edges: need at least one bin");
  double m = 0.0;
  for (const auto& e : params.entries)
    if (e.prunable)
      for (float w : e.value.data) m = std::max(m, static_cast<double>(std::fabs(w)));
  if (m == 0.0) m = 1.0;
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    edges[i] = -m + 2.0 * m * static_cast<double>(i) / static_cast<double>(bins);
  return edges;
}

namespace {
double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}
}  // namespace

std::vector<double> hvp(const GradientFn& grad, std::span<const double> w,
                        std::span<const double> v, double delta) {
  if (w.size() != v.size()) throw DimensionError("hvp: dimension mismatch");
  const double vn = norm2(v);
  if (vn == 0.0) throw ConfigError("hvp: direction vector is zero");
  if (delta <= 0.0) delta = std::max(1e-6, 1e-3 * norm2(w) / vn);

  std::vector<double> shifted(w.size()), gp(w.size()), gm(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] + delta * v[i];
  grad(shifted, gp);
  for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] - delta * v[i];
  grad(shifted, gm);

  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out[i] = (gp[i] - gm[i]) / (2.0 * delta);
    if (!std::isfinite(out[i])) throw NumericError("hvp: non-finite result");
  }
  return out;
}

EigenEstimate top_eigenvalue(const MatVecFn& matvec, std::size_t dim,
                             const SharpnessProbe& probe, RngState& rng) {
  if (dim == 0) throw ConfigError("top_eigenvalue: zero dimension");
  if (!(probe.tol > 0.0)) throw ConfigError("top_eigenvalue: tol must be > 0");

  std::vector<double> v(dim), av(dim);
  for (auto& x : v) x = rng.normal(0.0, 1.0);
  double vn = norm2(v);
  if (vn == 0.0) { v[0] = 1.0; vn = 1.0; }
  for (auto& x : v) x /= vn;

  EigenEstimate est;
  double prev = 0.0;
  for (std::size_t it = 0; it < probe.max_iters; ++it) {
    matvec(v, av);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < dim; ++i) rayleigh += v[i] * av[i];
    est.value = rayleigh;
    est.iterations = it + 1;

    if (it > 0) {
      const double denom = std::max(std::fabs(rayleigh), 1e-300);
      if (std::fabs(rayleigh - prev) / denom < probe.tol) {
        est.converged = true;
        return est;
      }
    }
    prev = rayleigh;

    const double an = norm2(av);
    if (an == 0.0) {  // operator annihilated the probe: zero curvature
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    for (std::size_t i = 0; i < dim; ++i) v[i] = av[i] / an;
  }
  return est;
}

namespace {

// Gradient of the batch loss (plus lambda psi when reg is set) as a flat
// double vector, evaluated at weights `w` written into a scratch ParamSet.
struct NetGradField {
  const Net* net;
  ParamSet scratch;
  const Batch* batch;
  LossKind kind;
  const RegConfig* reg;

  void operator()(std::span<const double> w, std::span<double> out) {
    std::size_t pos = 0;
    for (auto& e : scratch.entries)
      for (auto& x : e.value.data) x = static_cast<float>(w[pos++]);
    loss_and_grad(*net, scratch, *batch, kind);
    PerEntryValues psi_g;
    if (reg != nullptr && reg->lambda != 0.0) psi_g = psi_grad(scratch, *reg);
    pos = 0;
    for (std::size_t i = 0; i < scratch.entries.size(); ++i) {
      const auto& e = scratch.entries[i];
      for (std::size_t j = 0; j < e.grad.size(); ++j) {
        double g = e.grad.data[j];
        if (!psi_g.empty() && !psi_g[i].empty()) g += reg->lambda * psi_g[i][j];
        out[pos++] = g;
      }
    }
  }
};

std::vector<double> flatten_params(const ParamSet& params) {
  std::vector<double> w;
  w.reserve(params.total_values());
  for (const auto& e : params.entries)
    for (float x : e.value.data) w.push_back(x);
  return w;
}

}  // namespace

std::vector<double> hvp(const Net& net, const ParamSet& params, const Batch& batch,
                        LossKind kind, std::span<const double> v, double delta,
                        const RegConfig* reg) {
  NetGradField field{&net, params, &batch, kind, reg};
  const std::vector<double> w = flatten_params(params);
  return hvp([&field](std::span<const double> x, std::span<double> g) { field(x, g); },
             w, v, delta);
}

EigenEstimate top_hessian_eigenvalue(const Net& net, const ParamSet& params,
                                     const Batch& batch, LossKind kind,
                                     const SharpnessProbe& probe, RngState& rng,
                                     const RegConfig* reg) {
  NetGradField field{&net, params, &batch, kind, reg};
  const std::vector<double> w = flatten_params(params);
  auto matvec = [&](std::span<const double> v, std::span<double> out) {
    const auto r = hvp([&field](std::span<const double> x, std::span<double> g) { field(x, g); },
                       w, v, probe.delta);
    std::copy(r.begin(), r.end(), out.begin());
  };
  return top_eigenvalue(matvec, w.size(), probe, rng);
}

std::vector<double> ema(std::span<const double> series, double gamma) {
  if (series.empty()) throw ConfigError("ema: empty series");
  if (!(gamma > 0.0) || !(gamma < 1.0)) throw ConfigError("ema: gamma must lie in (0, 1)");
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t t = 1; t < series.size(); ++t)
    out[t] = gamma * out[t - 1] + (1.0 - gamma) * series[t];
  return out;
}

}  // namespace varprune
