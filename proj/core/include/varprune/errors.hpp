#pragma once

#include <stdexcept>
#include <string>

namespace varprune {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// exit codes: ConfigError -> 1, NumericError -> 2, IoError -> 3.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/extent mismatches. A kind of configuration error for exit purposes.
struct DimensionError : ConfigError {
  explicit DimensionError(const std::string& msg) : ConfigError(msg) {}
};

// NaN/Inf reached a public value, or an optimizer step diverged.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace varprune
