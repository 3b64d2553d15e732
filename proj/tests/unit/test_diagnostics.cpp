#include <doctest.h>

#include <cmath>

#include "varprune/diagnostics.hpp"
#include "varprune/errors.hpp"

using namespace varprune;

namespace {

ParamSet weights_only(const std::vector<float>& values) {
  ParamSet p;
  p.add("w.weight", Tensor::vector(values), true);
  return p;
}

// Exact matvec for a dense symmetric matrix, used as the analytic oracle.
MatVecFn dense_matvec(std::vector<double> a, std::size_t d) {
  return [a = std::move(a), d](std::span<const double> v, std::span<double> out) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * v[j];
      out[i] = acc;
    }
  };
}

GradientFn quadratic_grad(std::vector<double> a, std::size_t d) {
  return [a = std::move(a), d](std::span<const double> w, std::span<double> out) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * w[j];
      out[i] = acc;
    }
  };
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("model variance basics") {
  CHECK(model_variance(weights_only({0.5f, 0.5f, 0.5f})) == 0.0);
  CHECK(model_variance(weights_only({0.0f, 2.0f})) == 1.0);
  ParamSet none;
  none.add("b.bias", Tensor::vector({1.0f}), false);
  CHECK_THROWS_AS(model_variance(none), ConfigError);
}

TEST_CASE("model variance pools entries") {
  ParamSet p;
  p.add("a.weight", Tensor::vector({0.0f}), true);
  p.add("b.weight", Tensor::vector({2.0f}), true);
  CHECK(model_variance(p) == 1.0);
}

TEST_CASE("model variance is shift equivariant") {
  RngState rng(70);
  ParamSet p;
  p.add("a.weight", Tensor::vector(rng.draw_normal(40, 0.0, 1.5)), true);
  p.add("b.weight", Tensor::vector(rng.draw_normal(24, 0.5, 0.5)), true);
  const double base = model_variance(p);
  for (auto& e : p.entries)
    for (auto& w : e.value.data) w += 0.75f;
  CHECK(std::fabs(model_variance(p) - base) <= 1e-6);
}

TEST_CASE("histogram counts") {
  const ParamSet single = weights_only({0.5f});
  const Histogram h = weight_histogram(single, {0.0, 1.0});
  CHECK(h.counts == std::vector<std::size_t>{1});

  const ParamSet sym = weights_only({-0.75f, -0.25f, 0.25f, 0.75f});
  const Histogram hs = weight_histogram(sym, {-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(hs.counts == std::vector<std::size_t>{1, 1, 1, 1});

  CHECK_THROWS_AS(weight_histogram(single, {1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(weight_histogram(weights_only({2.0f}), {0.0, 1.0}), ConfigError);
  const Histogram clamped = weight_histogram(weights_only({2.0f}), {0.0, 1.0}, true);
  CHECK(clamped.counts == std::vector<std::size_t>{1});
}

TEST_CASE("uniform draws fill equal bins evenly") {
  RngState rng(71);
  ParamSet p;
  p.add("w.weight", Tensor::vector(rng.draw_uniform(1000, -1.0, 1.0)), true);
  const Histogram h = weight_histogram(p, {-1.0, -0.5, 0.0, 0.5, 1.0});
  std::size_t total = 0;
  const double sigma = std::sqrt(1000.0 * 0.25 * 0.75);
  for (auto c : h.counts) {
    total += c;
    CHECK(std::fabs(static_cast<double>(c) - 250.0) < 5.0 * sigma);
  }
  CHECK(total == 1000);
}

TEST_CASE("hvp on a quadratic equals the analytic matvec") {
  const std::vector<double> a = {2.0, 0.5, 0.0,
                                 0.5, 1.0, -0.3,
                                 0.0, -0.3, 4.0};
  const auto grad = quadratic_grad(a, 3);
  const std::vector<double> w = {0.4, -1.0, 0.2};
  const std::vector<double> v = {1.0, 2.0, -1.0};
  const auto hv = hvp(grad, w, v, 0.0);
  const std::vector<double> want = {2.0 * 1 + 0.5 * 2 + 0.0 * -1,
                                    0.5 * 1 + 1.0 * 2 + -0.3 * -1,
                                    0.0 * 1 + -0.3 * 2 + 4.0 * -1};
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(hv[i] == doctest::Approx(want[i]).epsilon(1e-6));
}

TEST_CASE("hvp of a linear field is zero") {
  GradientFn constant = [](std::span<const double>, std::span<double> out) {
    out[0] = 3.0;
    out[1] = -1.0;
  };
  const auto hv = hvp(constant, std::vector<double>{1.0, 2.0},
                      std::vector<double>{0.5, 0.5}, 0.0);
  CHECK(std::fabs(hv[0]) < 1e-6);
  CHECK(std::fabs(hv[1]) < 1e-6);
}

TEST_CASE("hvp is linear in the direction") {
  const std::vector<double> a = {3.0, 1.0, 1.0, 2.0};
  const auto grad = quadratic_grad(a, 2);
  const std::vector<double> w = {1.0, -0.5};
  const std::vector<double> v1 = {1.0, 0.0}, v2 = {0.0, 1.0}, v12 = {1.0, 1.0};
  const auto h1 = hvp(grad, w, v1, 0.0);
  const auto h2 = hvp(grad, w, v2, 0.0);
  const auto h12 = hvp(grad, w, v12, 0.0);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(h12[i] == doctest::Approx(h1[i] + h2[i]).epsilon(1e-4));
}

TEST_CASE("power iteration on diag(1,4)") {
  RngState rng(81);
  const auto matvec = dense_matvec({1.0, 0.0, 0.0, 4.0}, 2);
  SharpnessProbe probe;
  probe.max_iters = 200;
  probe.tol = 1e-10;
  const auto est = top_eigenvalue(matvec, 2, probe, rng);
  CHECK(est.converged);
  CHECK(est.iterations <= 200);
  CHECK(est.value == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("doubling the operator doubles the eigenvalue") {
  RngState rng1(82), rng2(82);
  const std::vector<double> a = {2.0, 0.7, 0.7, 1.5};
  const auto m1 = dense_matvec(a, 2);
  std::vector<double> a2(a);
  for (auto& x : a2) x *= 2.0;
  const auto m2 = dense_matvec(a2, 2);
  SharpnessProbe probe;
  probe.tol = 1e-12;
  probe.max_iters = 500;
  const auto e1 = top_eigenvalue(m1, 2, probe, rng1);
  const auto e2 = top_eigenvalue(m2, 2, probe, rng2);
  CHECK(e2.value == doctest::Approx(2.0 * e1.value).epsilon(1e-3));
}

TEST_CASE("power iteration recovers a known 64-dim spectrum") {
  // A = Q diag(eig) Q' with a spectral gap of at least 0.1 at the top.
  RngState rng(83);
  const std::size_t d = 64;
  std::vector<double> eig(d);
  eig[0] = 3.0;
  for (std::size_t i = 1; i < d; ++i) eig[i] = rng.uniform(0.1, 2.9);

  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (auto& x : q[i]) x = rng.normal(0.0, 1.0);
    for (std::size_t j = 0; j < i; ++j) {
      double proj = 0.0;
      for (std::size_t k = 0; k < d; ++k) proj += q[i][k] * q[j][k];
      for (std::size_t k = 0; k < d; ++k) q[i][k] -= proj * q[j][k];
    }
    double nrm = 0.0;
    for (double x : q[i]) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (auto& x : q[i]) x /= nrm;
  }
  std::vector<double> a(d * d, 0.0);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) a[i * d + j] += eig[k] * q[k][i] * q[k][j];

  SharpnessProbe probe;
  probe.max_iters = 500;
  probe.tol = 1e-12;
  const auto est = top_eigenvalue(dense_matvec(std::move(a), d), d, probe, rng);
  CHECK(est.iterations <= 500);
  CHECK(est.value == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("ema recursion") {
  const std::vector<double> constant = {2.0, 2.0, 2.0};
  CHECK(ema(constant, 0.5) == constant);

  const std::vector<double> x = {0.0, 1.0};
  const auto s = ema(x, 0.9);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(0.1).epsilon(1e-12));

  const auto tiny_gamma = ema(x, 1e-9);
  CHECK(tiny_gamma[1] == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(ema(std::vector<double>{}, 0.5), ConfigError);
  CHECK_THROWS_AS(ema(x, 1.0), ConfigError);
}

TEST_CASE("ema stays within the series range") {
  RngState rng(84);
  std::vector<double> x(50);
  for (auto& v : x) v = rng.uniform(-3.0, 3.0);
  double lo = x[0], hi = x[0];
  for (double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double g : {0.1, 0.5, 0.99}) {
    for (double s : ema(x, g)) {
      CHECK(s >= lo);
      CHECK(s <= hi);
    }
  }
}

}  // TEST_SUITE
