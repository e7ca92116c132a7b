#include "sgldreg/field.hpp"

#include "sgldreg/error.hpp"

namespace sgldreg {

namespace {

Extents with_leading(std::size_t lead, const Extents& grid) {
  if (grid.empty() || grid.size() > 3) {
    throw ShapeError("grid must have 1 to 3 axes, got " + to_string(grid));
  }
  Extents shape{lead};
  shape.insert(shape.end(), grid.begin(), grid.end());
  return shape;
}

}  // namespace

Volume::Volume(Extents grid, double fill) : data_(with_leading(1, grid), fill) {}

Volume::Volume(Tensor data) : data_(std::move(data)) {
  if (data_.rank() < 2 || data_.rank() > 4 || data_.extent(0) != 1) {
    throw ShapeError("volume tensor must be [1, ...spatial], got " + to_string(data_.shape()));
  }
}

Extents Volume::grid() const { return Extents(data_.shape().begin() + 1, data_.shape().end()); }

VectorField::VectorField(Extents grid, double fill)
    : data_(with_leading(grid.size(), grid), fill) {}

VectorField::VectorField(Tensor data) : data_(std::move(data)) {
  if (data_.rank() < 2 || data_.rank() > 4 || data_.extent(0) != data_.rank() - 1) {
    throw ShapeError("vector field tensor must be [D, ...spatial] with D spatial axes, got " +
                     to_string(data_.shape()));
  }
}

Extents VectorField::grid() const {
  return Extents(data_.shape().begin() + 1, data_.shape().end());
}

std::size_t linear_index(const Extents& grid, const std::vector<std::size_t>& coord) {
  std::size_t idx = 0;
  for (std::size_t d = 0; d < grid.size(); ++d) idx = idx * grid[d] + coord[d];
  return idx;
}

}  // namespace sgldreg
