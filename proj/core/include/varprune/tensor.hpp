#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace varprune {

// Dense row-major float32 tensor, rank 1..4. product(shape) == data.size()
// holds at all times, and every public operation keeps the values finite.
// Reductions accumulate in double and run in a fixed sequential order, so
// replaying the same op sequence is bitwise reproducible.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_in);
  Tensor(std::vector<std::size_t> shape_in, std::vector<float> data_in);

  static Tensor matrix(std::size_t rows, std::size_t cols);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<float> values);
  static Tensor vector(std::vector<float> values);
  static Tensor identity(std::size_t n);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool empty() const { return data.empty(); }

  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;
  float& at(std::size_t r, std::size_t c);
  float at(std::size_t r, std::size_t c) const;

  std::span<const float> values() const { return data; }
  std::span<float> values() { return data; }
};

std::size_t shape_product(std::span<const std::size_t> shape);
std::string shape_to_string(std::span<const std::size_t> shape);
bool same_shape(const Tensor& a, const Tensor& b);

// C[i][j] = sum_t A[i][t] * B[t][j], t ascending, double accumulator.
Tensor matmul(const Tensor& a, const Tensor& b);

// (1/n) * sum((v_i - mean)^2). Two passes, double accumulation.
double population_variance(std::span<const float> values);
double population_variance(std::span<const double> values);

// Throws NumericError naming `context` if any value is NaN or infinite.
void ensure_all_finite(const Tensor& t, const std::string& context);

}  // namespace varprune
