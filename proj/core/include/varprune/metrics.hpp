#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "varprune/tensor.hpp"

namespace varprune {

// Row-major binary pixel grid. Pixels are addressed (x, y) with x the
// column; distances are Euclidean between pixel centers.
struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
  void set(std::size_t x, std::size_t y, std::uint8_t v) { values[y * width + x] = v; }
  std::size_t pixels() const { return width * height; }

  static BinaryMask zeros(std::size_t w, std::size_t h);
};

// Fraction of matching positions.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

// Argmax per row; ties pick the lowest class index.
std::vector<int> predict_labels(const Tensor& scores);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

ConfusionCounts count_confusion(const BinaryMask& pred, const BinaryMask& gt);

// 2TP / (2TP + FP + FN); 1.0 when both masks are empty.
double f1_binary(const BinaryMask& pred, const BinaryMask& gt);

// TP / (TP + alpha*FP + beta*FN); 1.0 when both masks are empty.
// alpha = beta = 0.5 reduces to the Dice score (== F1).
double tversky(const BinaryMask& pred, const BinaryMask& gt, double alpha, double beta);

// Symmetric Hausdorff distance between the foreground pixel sets. Both
// empty -> 0; exactly one empty -> hypot(width, height), the grid diagonal,
// as an out-of-band sentinel.
double hausdorff(const BinaryMask& a, const BinaryMask& b);

// Threshold sigmoid scores at score > 0 (probability 0.5) into a mask grid.
BinaryMask binarize_scores(std::span<const float> scores, std::size_t width,
                           std::size_t height);

}  // namespace varprune
