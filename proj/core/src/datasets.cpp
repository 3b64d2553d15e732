#include "varprune/datasets.hpp"

#include <cmath>
#include <numbers>

#include "varprune/errors.hpp"

namespace varprune {

Dataset gen_two_moons(std::size_t n, double noise, RngState& rng) {
  if (n < 2) throw ConfigError("two_moons: n must be >= 2");
  if (noise < 0.0) throw ConfigError("two_moons: noise must be >= 0");

  Dataset d;
  d.inputs = Tensor({n, 2});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double t = rng.uniform01() * std::numbers::pi;
    double x, y;
    if (label == 0) {
      x = std::cos(t);
      y = std::sin(t);
    } else {
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
    }
    x += noise * rng.normal(0.0, 1.0);
    y += noise * rng.normal(0.0, 1.0);
    d.inputs.data[i * 2] = static_cast<float>(x);
    d.inputs.data[i * 2 + 1] = static_cast<float>(y);
    d.labels[i] = label;
  }
  return d;
}

Dataset gen_blobs(std::size_t n, std::size_t k, double spread, RngState& rng) {
  if (n < 2) throw ConfigError("blobs: n must be >= 2");
  if (k < 1 || k > n) throw ConfigError("blobs: k must lie in [1, n]");
  if (spread < 0.0) throw ConfigError("blobs: spread must be >= 0");

  Dataset d;
  d.inputs = Tensor({n, 2});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = i % k;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) /
                         static_cast<double>(k);
    const double cx = 2.0 * std::cos(angle), cy = 2.0 * std::sin(angle);
    d.inputs.data[i * 2] = static_cast<float>(cx + spread * rng.normal(0.0, 1.0));
    d.inputs.data[i * 2 + 1] = static_cast<float>(cy + spread * rng.normal(0.0, 1.0));
    d.labels[i] = static_cast<int>(label);
  }
  return d;
}

Dataset gen_shapes(std::size_t grid_w, std::size_t grid_h, std::size_t n_samples,
                   RngState& rng) {
  if (grid_w == 0 || grid_h == 0) throw ConfigError("shapes: grid extents must be positive");
  if (n_samples == 0) throw ConfigError("shapes: n_samples must be >= 1");
  const std::size_t pixels = grid_w * grid_h;

  Dataset d;
  d.grid_w = grid_w;
  d.grid_h = grid_h;
  d.inputs = Tensor({n_samples, pixels});
  d.mask_targets = Tensor({n_samples, pixels});
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::vector<std::uint8_t> mask(pixels, 0);
    const std::size_t count = 1 + static_cast<std::size_t>(rng.below(3));
    for (std::size_t c = 0; c < count; ++c) {
      const bool disk = rng.below(2) == 1;
      if (disk) {
        const auto cx = static_cast<double>(rng.below(grid_w));
        const auto cy = static_cast<double>(rng.below(grid_h));
        const double radius =
            1.0 + static_cast<double>(rng.below(std::max<std::size_t>(1, std::min(grid_w, grid_h) / 4) + 1));
        for (std::size_t y = 0; y < grid_h; ++y)
          for (std::size_t x = 0; x < grid_w; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            if (dx * dx + dy * dy <= radius * radius) mask[y * grid_w + x] = 1;
          }
      } else {
        const auto x0 = static_cast<std::size_t>(rng.below(grid_w));
        const auto y0 = static_cast<std::size_t>(rng.below(grid_h));
        const auto w = 1 + static_cast<std::size_t>(rng.below(std::max<std::size_t>(1, grid_w / 2)));
        const auto h = 1 + static_cast<std::size_t>(rng.below(std::max<std::size_t>(1, grid_h / 2)));
        for (std::size_t y = y0; y < std::min(grid_h, y0 + h); ++y)
          for (std::size_t x = x0; x < std::min(grid_w, x0 + w); ++x)
            mask[y * grid_w + x] = 1;
      }
    }
    for (std::size_t p = 0; p < pixels; ++p) {
      const double base = mask[p] != 0 ? 0.85 : 0.15;
      d.inputs.data[s * pixels + p] = static_cast<float>(base + 0.1 * rng.normal(0.0, 1.0));
      d.mask_targets.data[s * pixels + p] = static_cast<float>(mask[p]);
    }
  }
  return d;
}

}  // namespace varprune
