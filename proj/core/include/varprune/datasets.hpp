#pragma once

#include "varprune/model.hpp"
#include "varprune/rng.hpp"

namespace varprune {

// Seeded synthetic datasets. Each generator draws from the supplied stream
// in a fixed order, so identical seeds reproduce identical datasets
// bit-for-bit. Classes are balanced within +-1 by round-robin assignment.

// Two interleaved half-circles with additive Gaussian noise; labels 0/1.
Dataset gen_two_moons(std::size_t n, double noise, RngState& rng);

// k Gaussian clusters centered on a circle of radius 2; labels 0..k-1.
Dataset gen_blobs(std::size_t n, std::size_t k, double spread, RngState& rng);

// Per sample: 1-3 random axis-aligned rectangles or disks as foreground.
// Inputs are noisy intensities (background 0.15, foreground 0.85, sigma
// 0.1); targets are the clean binary masks, flattened row-major.
Dataset gen_shapes(std::size_t grid_w, std::size_t grid_h, std::size_t n_samples,
                   RngState& rng);

}  // namespace varprune
