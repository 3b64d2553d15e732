#pragma once

#include <filesystem>

#include "varprune/param_set.hpp"
#include "varprune/pruner.hpp"

namespace varprune {

// Bit-exact binary formats, all integers little-endian:
//
//   checkpoint  magic "VARW" | u32 version (1) | u32 entry count, then per
//               entry: u32 name length + UTF-8 name | u32 rank | u32 extents
//               | raw IEEE-754 float32 values (LE)
//   mask        same layout with magic "VARM" and one byte per value, each
//               0 or 1, in place of the float payload
//
// Loading restores prunable flags by the naming convention used throughout:
// entries named "*.weight" are prunable. Malformed input throws IoError
// naming the byte offset.

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);

void save_mask(const Mask& mask, const std::filesystem::path& path);
Mask load_mask(const std::filesystem::path& path);

}  // namespace varprune
