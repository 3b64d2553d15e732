#include "varprune/tensor.hpp"

#include <cmath>

#include "varprune/errors.hpp"

namespace varprune {

namespace {
constexpr std::size_t kMaxRank = 4;

void check_shape(std::span<const std::size_t> shape) {
  if (shape.empty() || shape.size() > kMaxRank)
    throw DimensionError("tensor rank must be 1.." + std::to_string(kMaxRank) +
                         ", got " + std::to_string(shape.size()));
  for (auto e : shape)
    if (e == 0) throw DimensionError("tensor extents must be positive");
}
}  // namespace

std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_to_string(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

Tensor::Tensor(std::vector<std::size_t> shape_in) : shape(std::move(shape_in)) {
  check_shape(shape);
  data.assign(shape_product(shape), 0.0f);
}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<float> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
  check_shape(shape);
  if (shape_product(shape) != data.size())
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_to_string(shape));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols) {
  return Tensor({rows, cols});
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<float> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::vector(std::vector<float> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data[i * n + i] = 1.0f;
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows(): tensor is not a matrix");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols(): tensor is not a matrix");
  return shape[1];
}

float& Tensor::at(std::size_t r, std::size_t c) {
  return data[r * cols() + c];
}

float Tensor::at(std::size_t r, std::size_t c) const {
  return data[r * cols() + c];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw DimensionError("matmul: both operands must be matrices");
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner extents differ, " +
                         shape_to_string(a.shape) + " vs " + shape_to_string(b.shape));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t)
        acc += static_cast<double>(a.data[i * k + t]) * static_cast<double>(b.data[t * n + j]);
      c.data[i * n + j] = static_cast<float>(acc);
    }
  }
  ensure_all_finite(c, "matmul");
  return c;
}

namespace {
template <typename T>
double variance_impl(std::span<const T> v) {
  if (v.empty()) throw ConfigError("population_variance: empty vector");
  double sum = 0.0;
  for (auto x : v) sum += static_cast<double>(x);
  const double mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (auto x : v) {
    const double d = static_cast<double>(x) - mean;
    sq += d * d;
  }
  return sq / static_cast<double>(v.size());
}
}  // namespace

double population_variance(std::span<const float> values) {
  return variance_impl(values);
}

double population_variance(std::span<const double> values) {
  return variance_impl(values);
}

void ensure_all_finite(const Tensor& t, const std::string& context) {
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    if (!std::isfinite(t.data[i]))
      throw NumericError(context + ": non-finite value at flat index " + std::to_string(i));
  }
}

}  // namespace varprune
