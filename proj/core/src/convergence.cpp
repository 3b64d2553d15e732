#include "varprune/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "varprune/errors.hpp"
#include "varprune/var_reg.hpp"

namespace varprune {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> v) { return dot(v, v); }

}  // namespace

QuadraticObjective::QuadraticObjective(std::vector<double> a, std::vector<double> b,
                                       double beta1)
    : a_(std::move(a)), b_(std::move(b)), beta1_(beta1) {
  const std::size_t d = b_.size();
  if (a_.size() != d * d) throw DimensionError("quadratic: A must be dim x dim");
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (std::fabs(a_[i * d + j] - a_[j * d + i]) > 1e-12)
        throw ConfigError("quadratic: A must be symmetric within 1e-12");
  if (!(beta1_ > 0.0)) throw ConfigError("quadratic: beta1 must be > 0");
}

double QuadraticObjective::value(std::span<const double> w) const {
  const std::size_t d = dim();
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += a_[i * d + j] * w[j];
    quad += w[i] * row;
  }
  return 0.5 * quad - dot(b_, w);
}

void QuadraticObjective::gradient(std::span<const double> w, std::span<double> out) const {
  const std::size_t d = dim();
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += a_[i * d + j] * w[j];
    out[i] = row - b_[i];
  }
}

QuadraticObjective make_random_psd_quadratic(std::size_t dim, double lambda_min,
                                             double lambda_max, RngState& rng) {
  if (dim == 0) throw ConfigError("quadratic: dim must be positive");
  if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
    throw ConfigError("quadratic: need 0 < lambda_min <= lambda_max");

  // Spectrum with the top eigenvalue pinned exactly at lambda_max.
  std::vector<double> eig(dim);
  eig[0] = lambda_max;
  for (std::size_t i = 1; i < dim; ++i) eig[i] = rng.uniform(lambda_min, lambda_max);

  // Random orthonormal basis via Gram-Schmidt on a Gaussian matrix.
  std::vector<std::vector<double>> q(dim, std::vector<double>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    for (auto& x : q[i]) x = rng.normal(0.0, 1.0);
    for (std::size_t j = 0; j < i; ++j) {
      const double proj = dot(q[i], q[j]);
      for (std::size_t k = 0; k < dim; ++k) q[i][k] -= proj * q[j][k];
    }
    const double nrm = std::sqrt(norm_sq(q[i]));
    if (nrm < 1e-12) throw NumericError("quadratic: degenerate basis draw");
    for (auto& x : q[i]) x /= nrm;
  }

  // A = sum_k eig_k q_k q_k', symmetrized against roundoff.
  std::vector<double> a(dim * dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k)
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        a[i * dim + j] += eig[k] * q[k][i] * q[k][j];
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) {
      const double s = 0.5 * (a[i * dim + j] + a[j * dim + i]);
      a[i * dim + j] = s;
      a[j * dim + i] = s;
    }

  // Minimizer with spread magnitudes and random signs; b = A w*.
  std::vector<double> w_star(dim);
  for (auto& x : w_star) {
    const double mag = 0.5 + 1.5 * rng.uniform01();
    x = rng.uniform01() < 0.5 ? -mag : mag;
  }
  std::vector<double> b(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) b[i] += a[i * dim + j] * w_star[j];

  QuadraticObjective obj(std::move(a), std::move(b), lambda_max);
  obj.minimizer_ = std::move(w_star);
  obj.lower_bound_ = obj.value(obj.minimizer_);
  return obj;
}

LogisticObjective::LogisticObjective(std::vector<double> x, std::vector<double> y,
                                     std::size_t dim)
    : x_(std::move(x)), y_(std::move(y)), dim_(dim) {
  if (dim_ == 0 || y_.empty() || x_.size() != y_.size() * dim_)
    throw DimensionError("logistic: feature matrix must be n x dim");
  for (double v : y_)
    if (v != 1.0 && v != -1.0) throw ConfigError("logistic: labels must be +-1");
  double trace = 0.0;
  for (double v : x_) trace += v * v;
  beta1_bound_ = trace / (4.0 * static_cast<double>(y_.size()));
}

double LogisticObjective::value(std::span<const double> w) const {
  double total = 0.0;
  for (std::size_t i = 0; i < y_.size(); ++i) {
    const double z = y_[i] * dot({&x_[i * dim_], dim_}, w);
    // log(1 + exp(-z)) without overflow for very negative z.
    total += z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return total / static_cast<double>(y_.size());
}

void LogisticObjective::sample_gradient(std::span<const double> w, std::size_t row,
                                        std::span<double> out) const {
  const double z = y_[row] * dot({&x_[row * dim_], dim_}, w);
  const double sig = 1.0 / (1.0 + std::exp(z));  // sigmoid(-z)
  for (std::size_t j = 0; j < dim_; ++j) out[j] = -sig * y_[row] * x_[row * dim_ + j];
}

void LogisticObjective::gradient(std::span<const double> w, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> g(dim_);
  for (std::size_t i = 0; i < y_.size(); ++i) {
    sample_gradient(w, i, g);
    for (std::size_t j = 0; j < dim_; ++j) out[j] += g[j];
  }
  for (auto& v : out) v /= static_cast<double>(y_.size());
}

void LogisticObjective::stochastic_gradient(std::span<const double> w, std::size_t batch,
                                            RngState& rng, std::span<double> out) const {
  if (batch == 0) throw ConfigError("logistic: batch must be positive");
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> g(dim_);
  for (std::size_t k = 0; k < batch; ++k) {
    const auto row = static_cast<std::size_t>(rng.below(y_.size()));
    sample_gradient(w, row, g);
    for (std::size_t j = 0; j < dim_; ++j) out[j] += g[j];
  }
  for (auto& v : out) v /= static_cast<double>(batch);
}

double LogisticObjective::gradient_variance(std::span<const double> w) const {
  std::vector<double> mean(dim_);
  gradient(w, mean);
  std::vector<double> g(dim_);
  double total = 0.0;
  for (std::size_t i = 0; i < y_.size(); ++i) {
    sample_gradient(w, i, g);
    for (std::size_t j = 0; j < dim_; ++j) {
      const double d = g[j] - mean[j];
      total += d * d;
    }
  }
  return total / static_cast<double>(y_.size());
}

LogisticObjective make_logistic_dataset(std::size_t n, std::size_t dim,
                                        double separation, double flip_prob,
                                        RngState& rng) {
  if (n < 2) throw ConfigError("logistic: need at least two samples");
  std::vector<double> x(n * dim);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double label = (i % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t j = 0; j < dim; ++j)
      x[i * dim + j] = rng.normal(label * separation, 1.0);
    y[i] = rng.uniform01() < flip_prob ? -label : label;
  }
  return LogisticObjective(std::move(x), std::move(y), dim);
}

CompositeObjective::CompositeObjective(const StochasticObjective& base, double lambda,
                                       double r, double epsilon,
                                       std::vector<std::pair<std::size_t, std::size_t>> layers)
    : base_(&base), lambda_(lambda), r_(r), epsilon_(epsilon), layers_(std::move(layers)) {
  if (layers_.empty()) layers_.push_back({0, base.dim()});
  for (const auto& [off, len] : layers_)
    if (len == 0 || off + len > base.dim())
      throw DimensionError("composite: layer slice out of range");
}

double CompositeObjective::value(std::span<const double> w) const {
  double total = base_->value(w);
  if (lambda_ != 0.0)
    for (const auto& [off, len] : layers_)
      total += lambda_ * psi_layer(w.subspan(off, len), r_, epsilon_);
  return total;
}

void CompositeObjective::add_reg_gradient(std::span<const double> w,
                                          std::span<double> out) const {
  if (lambda_ == 0.0) return;
  std::vector<double> g;
  for (const auto& [off, len] : layers_) {
    g.resize(len);
    psi_layer_grad(w.subspan(off, len), r_, epsilon_, g);
    for (std::size_t i = 0; i < len; ++i) out[off + i] += lambda_ * g[i];
  }
}

void CompositeObjective::gradient(std::span<const double> w, std::span<double> out) const {
  base_->gradient(w, out);
  add_reg_gradient(w, out);
}

void CompositeObjective::stochastic_gradient(std::span<const double> w, std::size_t batch,
                                             RngState& rng, std::span<double> out) const {
  base_->stochastic_gradient(w, batch, rng, out);
  add_reg_gradient(w, out);
}

double estimate_beta(const GradientFn& grad,
                     std::span<const std::vector<double>> samples, double safety) {
  if (samples.size() < 2) throw ConfigError("estimate_beta: need at least two samples");
  const std::size_t d = samples[0].size();
  std::vector<std::vector<double>> grads(samples.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < samples.size(); ++i) grad(samples[i], grads[i]);

  double best = -1.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      double dw = 0.0, dg = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double a = samples[i][k] - samples[j][k];
        const double b = grads[i][k] - grads[j][k];
        dw += a * a;
        dg += b * b;
      }
      if (dw == 0.0) continue;  // coincident pair
      best = std::max(best, std::sqrt(dg / dw));
    }
  }
  if (best < 0.0) throw ConfigError("estimate_beta: all sample pairs coincide");
  return best * safety;
}

double BoundParams::noise_term(double eta, double lambda) const {
  return eta * eta * beta / (2.0 * static_cast<double>(batch)) *
         (sigma2 + lambda * lambda * sigma_psi2);
}

BoundParams estimate_bounds(const LogisticObjective& objective, double lambda,
                            std::span<const double> w0, double radius,
                            std::size_t samples, std::size_t batch, RngState& rng,
                            double r, double epsilon) {
  BoundParams bounds;
  bounds.beta1 = objective.beta1_bound();
  const auto points = sample_ball(w0, radius, samples, rng);
  bounds.beta2 = estimate_beta(
      [r, epsilon](std::span<const double> w, std::span<double> out) {
        psi_layer_grad(w, r, epsilon, out);
      },
      points);
  bounds.beta = bounds.beta1 + lambda * bounds.beta2;
  bounds.sigma2 = objective.gradient_variance(w0);
  bounds.sigma_psi2 = 0.0;
  bounds.batch = batch;
  return bounds;
}

std::vector<std::vector<double>> sample_ball(std::span<const double> center,
                                             double radius, std::size_t count,
                                             RngState& rng) {
  std::vector<std::vector<double>> samples(count, std::vector<double>(center.size()));
  for (auto& s : samples) {
    for (std::size_t k = 0; k < center.size(); ++k)
      s[k] = center[k] + radius * rng.normal(0.0, 1.0);
  }
  return samples;
}

DescentReport descent_check(const StochasticObjective& total, std::span<const double> w0,
                            double eta, std::size_t steps) {
  const std::size_t d = total.dim();
  if (w0.size() != d) throw DimensionError("descent_check: w0 dimension mismatch");
  std::vector<double> w(w0.begin(), w0.end()), g(d);

  DescentReport report;
  report.steps = steps;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < steps; ++t) {
    const double l = total.value(w);
    total.gradient(w, g);
    const double gn2 = norm_sq(g);
    for (std::size_t i = 0; i < d; ++i) w[i] -= eta * g[i];
    const double l_next = total.value(w);

    const double bound = l - 0.5 * eta * gn2;
    const double slack = 1e-9 * (1.0 + std::fabs(l));
    const double margin = bound - l_next;
    report.min_margin = std::min(report.min_margin, margin);
    if (l_next > bound + slack) {
      ++report.violations;
      report.violation_margins.push_back(margin);
    }
  }
  return report;
}

std::vector<RatePoint> rate_check(const StochasticObjective& total,
                                  std::span<const double> w0, double c,
                                  std::span<const std::size_t> step_counts,
                                  std::span<const std::uint64_t> seeds,
                                  std::size_t batch) {
  const std::size_t d = total.dim();
  if (w0.size() != d) throw DimensionError("rate_check: w0 dimension mismatch");
  if (!(c > 0.0)) throw ConfigError("rate_check: c must be > 0");
  for (std::size_t i = 1; i < step_counts.size(); ++i)
    if (step_counts[i] <= step_counts[i - 1])
      throw ConfigError("rate_check: step counts must be ascending");

  std::vector<RatePoint> table;
  std::vector<double> w(d), g_full(d), g_step(d);
  for (const std::size_t steps : step_counts) {
    RatePoint point;
    point.steps = steps;
    const double eta = c / std::sqrt(static_cast<double>(steps));
    double sum_over_seeds = 0.0;
    for (const auto seed : seeds) {
      RngState rng(seed);
      std::copy(w0.begin(), w0.end(), w.begin());
      double sum_sq = 0.0;
      bool diverged = false;
      for (std::size_t t = 0; t < steps; ++t) {
        total.gradient(w, g_full);
        const double gn2 = norm_sq(g_full);
        if (!std::isfinite(gn2)) {
          diverged = true;
          break;
        }
        sum_sq += gn2;
        total.stochastic_gradient(w, batch, rng, g_step);
        for (std::size_t i = 0; i < d; ++i) w[i] -= eta * g_step[i];
      }
      if (diverged) {
        ++point.diverged_runs;
        point.per_seed.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const double avg = sum_sq / static_cast<double>(steps);
      point.per_seed.push_back(avg);
      sum_over_seeds += avg;
    }
    const auto ok = seeds.size() - point.diverged_runs;
    point.mean_avg_sq_grad = ok > 0 ? sum_over_seeds / static_cast<double>(ok)
                                    : std::numeric_limits<double>::quiet_NaN();
    table.push_back(std::move(point));
  }
  return table;
}

std::vector<DiminishingPoint> diminishing_check(const StochasticObjective& total,
                                                std::span<const double> w0, double eta0,
                                                std::span<const std::size_t> checkpoints) {
  const std::size_t d = total.dim();
  if (w0.size() != d) throw DimensionError("diminishing_check: w0 dimension mismatch");
  if (!(eta0 > 0.0)) throw ConfigError("diminishing_check: eta0 must be > 0");
  if (checkpoints.empty()) throw ConfigError("diminishing_check: no checkpoints");

  std::vector<std::size_t> sorted(checkpoints.begin(), checkpoints.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> w(w0.begin(), w0.end()), g(d);
  std::vector<DiminishingPoint> trace;
  double sum_eta = 0.0, sum_eta_g2 = 0.0;
  std::size_t next = 0;
  for (std::size_t t = 0; t < sorted.back() && next < sorted.size(); ++t) {
    total.gradient(w, g);
    const double eta_t = eta0 / static_cast<double>(t + 1);
    sum_eta += eta_t;
    sum_eta_g2 += eta_t * norm_sq(g);
    for (std::size_t i = 0; i < d; ++i) w[i] -= eta_t * g[i];
    if (t + 1 == sorted[next]) {
      trace.push_back({sorted[next], sum_eta_g2 / sum_eta});
      ++next;
    }
  }
  return trace;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("log_log_slope: need matching series of length >= 2");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    num += dx * (std::log(y[i]) - my);
    den += dx * dx;
  }
  return num / den;
}

}  // namespace varprune
