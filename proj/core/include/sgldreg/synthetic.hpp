#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgldreg/field.hpp"

namespace sgldreg {

enum class ShapeFamily { Blobs, Rings, Phantom };

std::string to_string(ShapeFamily family);
ShapeFamily parse_shape_family(const std::string& text);

/// Generator settings for a synthetic moving/fixed pair with known deformation.
struct SyntheticSpec {
  Extents grid{64, 64};
  ShapeFamily family = ShapeFamily::Blobs;
  std::size_t labels = 4;
  /// Largest displacement of the ground-truth velocity field, in voxels.
  double max_displacement = 11.0;
  /// Std (voxels) of the Gaussian used to smooth the white-noise velocity.
  double smoothness = 10.0;
  /// Std (voxels) of the blur applied to the piecewise-constant image.
  double edge_blur = 2.0;
  /// Amplitude of the smooth intensity texture inside the shapes.
  double texture = 0.08;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticPair {
  Volume moving;
  Volume fixed;
  std::vector<LabelMask> moving_masks;
  std::vector<LabelMask> fixed_masks;
  VectorField ground_truth;
};

/// fixed = warp(moving, phi*) and fixed_masks = warp_mask(moving_masks, phi*),
/// where phi* integrates a smoothed random velocity. A fold-producing draw is
/// retried at half the magnitude; NumericError after ten attempts.
SyntheticPair generate_pair(const SyntheticSpec& spec);

/// Separable Gaussian smoothing of every channel of a [C, ...spatial] tensor
/// with clamped borders. sigma <= 0 returns the input.
Tensor gaussian_smooth(const Tensor& data, double sigma);

}  // namespace sgldreg
