#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "varprune/diagnostics.hpp"
#include "varprune/rng.hpp"

namespace varprune {

// Smooth objective with exact analytic gradients and, when meaningful, an
// unbiased stochastic gradient. The synthetic objectives carry their
// smoothness constant so step sizes can satisfy eta <= 1/beta exactly.
class StochasticObjective {
 public:
  virtual ~StochasticObjective() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(std::span<const double> w) const = 0;
  virtual void gradient(std::span<const double> w, std::span<double> out) const = 0;

  // Unbiased draw; the deterministic objectives return the exact gradient.
  virtual void stochastic_gradient(std::span<const double> w, std::size_t batch,
                                   RngState& rng, std::span<double> out) const {
    (void)batch;
    (void)rng;
    gradient(w, out);
  }
};

// f(w) = 0.5 w'Aw - b'w with A symmetric PSD. beta1 is the exact largest
// eigenvalue, supplied at construction.
class QuadraticObjective final : public StochasticObjective {
 public:
  QuadraticObjective(std::vector<double> a, std::vector<double> b, double beta1);

  std::size_t dim() const override { return b_.size(); }
  double value(std::span<const double> w) const override;
  void gradient(std::span<const double> w, std::span<double> out) const override;

  double beta1() const { return beta1_; }
  const std::vector<double>& minimizer() const { return minimizer_; }
  double lower_bound() const { return lower_bound_; }

 private:
  friend QuadraticObjective make_random_psd_quadratic(std::size_t, double, double, RngState&);

  std::vector<double> a_;  // dim x dim, row-major
  std::vector<double> b_;
  double beta1_ = 0.0;
  std::vector<double> minimizer_;
  double lower_bound_ = 0.0;
};

// Random instance with spectrum drawn in [lambda_min, lambda_max], the top
// eigenvalue pinned at lambda_max exactly, and a known minimizer with
// well-spread magnitudes (b = A w*).
QuadraticObjective make_random_psd_quadratic(std::size_t dim, double lambda_min,
                                             double lambda_max, RngState& rng);

// Mean logistic loss (1/n) sum_i log(1 + exp(-y_i x_i'w)), y in {-1, +1}.
// Minibatches draw rows uniformly with replacement, so the per-sample
// gradient variance sigma^2 satisfies E|g_B - g|^2 = sigma^2 / b.
class LogisticObjective final : public StochasticObjective {
 public:
  LogisticObjective(std::vector<double> x, std::vector<double> y, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  double value(std::span<const double> w) const override;
  void gradient(std::span<const double> w, std::span<double> out) const override;
  void stochastic_gradient(std::span<const double> w, std::size_t batch, RngState& rng,
                           std::span<double> out) const override;

  // (1/(4n)) * trace(X'X): analytic upper bound on the Hessian spectrum.
  double beta1_bound() const { return beta1_bound_; }
  std::size_t samples() const { return y_.size(); }

  // Exact per-sample gradient variance (1/n) sum_i |grad_i - grad|^2 at w.
  double gradient_variance(std::span<const double> w) const;

  void sample_gradient(std::span<const double> w, std::size_t row,
                       std::span<double> out) const;

 private:
  std::vector<double> x_;  // n x dim
  std::vector<double> y_;
  std::size_t dim_ = 0;
  double beta1_bound_ = 0.0;
};

// Class-offset Gaussian features with labels flipped at `flip_prob`, so the
// problem stays noisy and minibatch gradients keep nonzero variance.
LogisticObjective make_logistic_dataset(std::size_t n, std::size_t dim,
                                        double separation, double flip_prob,
                                        RngState& rng);

// base(w) + lambda * sum over layer slices of psi_layer(w[slice]). An empty
// slice list treats the whole vector as one layer. The regularizer part is
// deterministic, so it adds nothing to the stochastic-gradient variance.
class CompositeObjective final : public StochasticObjective {
 public:
  CompositeObjective(const StochasticObjective& base, double lambda, double r = 1e-8,
                     double epsilon = 1e-8,
                     std::vector<std::pair<std::size_t, std::size_t>> layers = {});

  std::size_t dim() const override { return base_->dim(); }
  double value(std::span<const double> w) const override;
  void gradient(std::span<const double> w, std::span<double> out) const override;
  void stochastic_gradient(std::span<const double> w, std::size_t batch, RngState& rng,
                           std::span<double> out) const override;

  double lambda() const { return lambda_; }

 private:
  void add_reg_gradient(std::span<const double> w, std::span<double> out) const;

  const StochasticObjective* base_;
  double lambda_;
  double r_;
  double epsilon_;
  std::vector<std::pair<std::size_t, std::size_t>> layers_;  // (offset, length)
};

// Empirical Lipschitz constant of a gradient field: the largest pairwise
// ratio |g(u)-g(v)| / |u-v| over the samples, times a 1.5 safety factor.
// The estimate can only grow as samples are added. Coincident pairs are
// skipped; all-coincident samples are an error.
double estimate_beta(const GradientFn& grad,
                     std::span<const std::vector<double>> samples,
                     double safety = 1.5);

// Constants entering the expected-descent bound. sigma_psi2 stays zero by
// default: the regularizer gradient is a deterministic function of w, so the
// minibatch noise comes from the data term alone; the field is kept so the
// reported bound matches the full formula.
struct BoundParams {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta = 0.0;  // beta1 + lambda * beta2
  double sigma2 = 0.0;
  double sigma_psi2 = 0.0;
  std::size_t batch = 1;

  // (eta^2 beta / 2b) * (sigma^2 + lambda^2 sigma_psi^2)
  double noise_term(double eta, double lambda) const;
};

// beta2 from estimate_beta over a sample ball around w0 (the trajectory-
// local surrogate; grad psi has no global Lipschitz constant), sigma2 from
// the exact per-sample gradient variance at w0.
BoundParams estimate_bounds(const LogisticObjective& objective, double lambda,
                            std::span<const double> w0, double radius,
                            std::size_t samples, std::size_t batch, RngState& rng,
                            double r = 1e-8, double epsilon = 1e-8);

std::vector<std::vector<double>> sample_ball(std::span<const double> center,
                                             double radius, std::size_t count,
                                             RngState& rng);

// Full-batch descent certification: after each exact gradient step, verify
//   L(w_next) <= L(w) - (eta/2) |grad L(w)|^2 + slack,
// slack = 1e-9 * (1 + |L(w)|). Violations are data, not errors.
struct DescentReport {
  std::size_t steps = 0;
  std::size_t violations = 0;
  double min_margin = 0.0;  // min over steps of rhs - lhs, without slack
  std::vector<double> violation_margins;
};

DescentReport descent_check(const StochasticObjective& total, std::span<const double> w0,
                            double eta, std::size_t steps);

// Trajectory-average squared composite gradient norm for fresh runs with
// eta = c / sqrt(T), one run per (T, seed).
struct RatePoint {
  std::size_t steps = 0;
  double mean_avg_sq_grad = 0.0;
  std::vector<double> per_seed;
  std::size_t diverged_runs = 0;
};

std::vector<RatePoint> rate_check(const StochasticObjective& total,
                                  std::span<const double> w0, double c,
                                  std::span<const std::size_t> step_counts,
                                  std::span<const std::uint64_t> seeds,
                                  std::size_t batch);

// Step-size-weighted average squared gradient under eta_t = eta0 / (t+1)
// (full-batch), reported at each checkpoint step count.
struct DiminishingPoint {
  std::size_t steps = 0;
  double weighted_avg_sq_grad = 0.0;
};

std::vector<DiminishingPoint> diminishing_check(const StochasticObjective& total,
                                                std::span<const double> w0, double eta0,
                                                std::span<const std::size_t> checkpoints);

// Least-squares slope of log y against log x.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace varprune
