#pragma once

#include <span>

#include "sgldreg/field.hpp"

namespace sgldreg {

/// 2|a & b| / (|a| + |b|) over voxels with value > 0.5; 1 when both are empty.
double dice(const LabelMask& a, const LabelMask& b);

/// Linearly interpolated mask at p + u(p), thresholded at 0.5 (>= 0.5 is in).
LabelMask warp_mask(const LabelMask& mask, const VectorField& deformation);

/// Determinant of the Jacobian of p -> p + u(p) per voxel. Partial
/// derivatives use forward differences, backward differences on the last
/// voxel of an axis, and zero along axes of extent one.
Volume jacobian_determinant(const VectorField& deformation);

/// Percentage of voxels with a strictly negative Jacobian determinant.
double fold_percentage(const VectorField& deformation);

/// Sample Pearson correlation. Throws std::invalid_argument for fewer than two
/// samples, unequal lengths or a constant series.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace sgldreg
