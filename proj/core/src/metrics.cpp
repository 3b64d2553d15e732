#include "varprune/metrics.hpp"

#include <cmath>
#include <limits>

#include "varprune/errors.hpp"

namespace varprune {

BinaryMask BinaryMask::zeros(std::size_t w, std::size_t h) {
  return BinaryMask{w, h, std::vector<std::uint8_t>(w * h, 0)};
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw DimensionError("accuracy: label vectors differ in length");
  if (predicted.empty()) throw ConfigError("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    correct += (predicted[i] == truth[i]);
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

std::vector<int> predict_labels(const Tensor& scores) {
  const std::size_t n = scores.rows(), c = scores.cols();
  std::vector<int> labels(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (scores.data[r * c + j] > scores.data[r * c + best]) best = j;
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

namespace {
void check_extents(const BinaryMask& a, const BinaryMask& b, const char* op) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionError(std::string(op) + ": mask extents differ");
}
}  // namespace

ConfusionCounts count_confusion(const BinaryMask& pred, const BinaryMask& gt) {
  check_extents(pred, gt, "count_confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool p = pred.values[i] != 0, g = gt.values[i] != 0;
    if (p && g) ++c.tp;
    else if (p && !g) ++c.fp;
    else if (!p && g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_binary(const BinaryMask& pred, const BinaryMask& gt) {
  const auto c = count_confusion(pred, gt);
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;  // both masks empty
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double tversky(const BinaryMask& pred, const BinaryMask& gt, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0)
    throw ConfigError("tversky: alpha and beta must be >= 0");
  const auto c = count_confusion(pred, gt);
  const double denom = static_cast<double>(c.tp) + alpha * static_cast<double>(c.fp) +
                       beta * static_cast<double>(c.fn);
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) return 1.0;  // both masks empty
  if (denom == 0.0) return 0.0;
  return static_cast<double>(c.tp) / denom;
}

namespace {

std::vector<std::pair<double, double>> foreground(const BinaryMask& m) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x)
      if (m.at(x, y) != 0)
        pts.emplace_back(static_cast<double>(x), static_cast<double>(y));
  return pts;
}

double directed_hausdorff(const std::vector<std::pair<double, double>>& from,
                          const std::vector<std::pair<double, double>>& to) {
  double worst = 0.0;
  for (const auto& a : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : to) {
      const double dx = a.first - b.first, dy = a.second - b.second;
      best = std::min(best, dx * dx + dy * dy);
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace

double hausdorff(const BinaryMask& a, const BinaryMask& b) {
  check_extents(a, b, "hausdorff");
  const auto pa = foreground(a);
  const auto pb = foreground(b);
  if (pa.empty() && pb.empty()) return 0.0;
  if (pa.empty() || pb.empty())
    return std::hypot(static_cast<double>(a.width), static_cast<double>(a.height));
  return std::max(directed_hausdorff(pa, pb), directed_hausdorff(pb, pa));
}

BinaryMask binarize_scores(std::span<const float> scores, std::size_t width,
                           std::size_t height) {
  if (scores.size() != width * height)
    throw DimensionError("binarize_scores: score count does not match extents");
  BinaryMask m = BinaryMask::zeros(width, height);
  for (std::size_t i = 0; i < scores.size(); ++i)
    m.values[i] = scores[i] > 0.0f ? 1 : 0;  // sigmoid(s) > 0.5  <=>  s > 0
  return m;
}

}  // namespace varprune
