#pragma once

#include <cstddef>

#include "sgldreg/tensor.hpp"

namespace sgldreg {

/// Scalar image on a regular 1-3 dimensional grid, stored as a [1, ...spatial]
/// tensor. Intensities are expected in [0, 1] but not enforced.
class Volume {
 public:
  Volume() = default;
  explicit Volume(Extents grid, double fill = 0.0);
  /// Takes a [1, ...spatial] tensor.
  explicit Volume(Tensor data);

  Extents grid() const;
  std::size_t spatial_rank() const { return data_.rank() - 1; }
  std::size_t voxel_count() const { return data_.size(); }

  const Tensor& tensor() const noexcept { return data_; }
  Tensor& tensor() noexcept { return data_; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Tensor data_;
};

/// Binary label mask: a Volume whose values are 0 or 1.
using LabelMask = Volume;

/// D-component vector field on a D-dimensional grid, stored component-major as
/// a [D, ...spatial] tensor. Component d is the displacement (or velocity)
/// along spatial axis d, in voxels. As a deformation it means p -> p + u(p).
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(Extents grid, double fill = 0.0);
  explicit VectorField(Tensor data);

  Extents grid() const;
  std::size_t dims() const { return data_.empty() ? 0 : data_.extent(0); }
  std::size_t voxel_count() const { return data_.empty() ? 0 : data_.size() / dims(); }

  double& at(std::size_t component, std::size_t voxel) { return data_[component * voxel_count() + voxel]; }
  double at(std::size_t component, std::size_t voxel) const {
    return data_[component * voxel_count() + voxel];
  }

  const Tensor& tensor() const noexcept { return data_; }
  Tensor& tensor() noexcept { return data_; }

  friend bool operator==(const VectorField&, const VectorField&) = default;

 private:
  Tensor data_;
};

/// Row-major linear index of a spatial coordinate.
std::size_t linear_index(const Extents& grid, const std::vector<std::size_t>& coord);

}  // namespace sgldreg
