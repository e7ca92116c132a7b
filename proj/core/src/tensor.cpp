#include "sgldreg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "sgldreg/error.hpp"

namespace sgldreg {

std::size_t element_count(const Extents& extents) {
  if (extents.empty()) return 0;
  return std::accumulate(extents.begin(), extents.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Extents& extents) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < extents.size(); ++i) {
    if (i) os << ", ";
    os << extents[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Extents& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Extents shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Extents shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (values_.size() != element_count(shape_)) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " needs " +
                     std::to_string(element_count(shape_)) + " values, got " +
                     std::to_string(values_.size()));
  }
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) noexcept { std::fill(values_.begin(), values_.end(), value); }

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ShapeError("item() needs a single-element tensor, shape is " + to_string(shape_));
  }
  return values_[0];
}

Tensor Tensor::reshaped(Extents shape) const {
  Tensor out(std::move(shape));
  if (out.size() != size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(out.shape()));
  }
  std::copy(values_.begin(), values_.end(), out.values_.begin());
  return out;
}

Grid3 canonical_grid(const Extents& shape, std::size_t first_spatial) {
  if (shape.size() <= first_spatial || shape.size() - first_spatial > 3) {
    throw ShapeError("expected 1 to 3 spatial axes after axis " + std::to_string(first_spatial) +
                     ", got shape " + to_string(shape));
  }
  Grid3 g;
  g.spatial_rank = shape.size() - first_spatial;
  for (std::size_t d = 0; d < g.spatial_rank; ++d) {
    g.n[g.canonical_axis(d)] = shape[first_spatial + d];
  }
  return g;
}

}  // namespace sgldreg
