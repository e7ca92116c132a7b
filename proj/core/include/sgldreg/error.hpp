#pragma once

#include <stdexcept>
#include <string>

namespace sgldreg {

/// Inputs whose extents do not line up (tensor shapes, grids, channel counts).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration or file contents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a computation that cannot produce a defined result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgldreg
