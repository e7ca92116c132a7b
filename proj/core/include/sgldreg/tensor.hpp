#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sgldreg {

using Extents = std::vector<std::size_t>;

/// Storage precision of reals in files. Computation is always 64-bit.
enum class Precision { Float32, Float64 };

std::size_t element_count(const Extents& extents);
std::string to_string(const Extents& extents);

/// Dense row-major array of 64-bit reals.
///
/// Layout convention used across the library: the leading axis is the channel
/// (or vector component) axis and the remaining one to three axes are spatial.
/// A default-constructed tensor is empty and has no shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Extents shape, double fill = 0.0);
  Tensor(Extents shape, std::vector<double> values);

  static Tensor scalar(double value) { return Tensor({1}, value); }

  const Extents& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool flag) noexcept { requires_grad_ = flag; }

  bool all_finite() const noexcept;
  void fill(double value) noexcept;
  double item() const;
  Tensor reshaped(Extents shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) noexcept {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Extents shape_;
  std::vector<double> values_;
  bool requires_grad_ = false;
};

/// Spatial extents of a [C, ...spatial] tensor padded with leading ones to
/// exactly three axes (z, y, x). Lets kernels be written once for 1D/2D/3D.
struct Grid3 {
  std::array<std::size_t, 3> n{1, 1, 1};
  std::size_t spatial_rank = 0;

  std::size_t count() const noexcept { return n[0] * n[1] * n[2]; }
  /// Canonical axis index (0..2) of real spatial axis `d`.
  std::size_t canonical_axis(std::size_t d) const noexcept { return 3 - spatial_rank + d; }
};

/// Interprets axes [first_spatial, rank) of `shape` as 1-3 spatial axes.
Grid3 canonical_grid(const Extents& shape, std::size_t first_spatial = 1);

}  // namespace sgldreg
