#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgldreg/field.hpp"
#include "sgldreg/tape.hpp"

namespace sgldreg {

/// UNet backbone hyperparameters.
///
/// Every encoder entry but the last is a stride-2 convolution; the last entry
/// is the stride-1 bottleneck at the coarsest level. The decoder list starts
/// with that same bottleneck (so both lists name it, and its widths must
/// agree). Each further decoder entry upsamples by two and concatenates the
/// matching encoder output while skip levels remain, and is a plain
/// convolution afterwards. A final head convolution maps the decoder output,
/// upsampled to full resolution and concatenated with the input pair, to a
/// `spatial_dims`-component velocity field.
///
/// With the defaults and spatial_dims = 3 the network has 265,237 parameters.
struct BackboneConfig {
  std::size_t spatial_dims = 3;
  std::vector<std::size_t> encoder_channels{16, 32, 32, 32, 32};
  std::vector<std::size_t> decoder_channels{32, 32, 32, 32, 16};
  double leaky_slope = 0.2;
  std::size_t kernel_size = 3;
  /// Standard deviation of the head kernel; near zero so training starts at
  /// the identity deformation.
  double head_init_std = 1e-5;

  std::size_t output_channels() const noexcept { return spatial_dims; }
  std::size_t downsampling_levels() const noexcept { return encoder_channels.size() - 1; }
  /// Every spatial extent of the input must be a multiple of this.
  std::size_t required_divisor() const noexcept { return std::size_t{1} << downsampling_levels(); }

  void validate() const;
  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

/// One convolution of the backbone.
struct LayerSpec {
  static constexpr int kNoSkip = -1;
  static constexpr int kInputSkip = -2;

  std::string name;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;
  std::size_t upsample = 1;  // applied to the previous output before the skip concat
  int skip = kNoSkip;        // encoder layer index, kInputSkip, or kNoSkip
  bool activation = true;
  std::size_t parameter_count(std::size_t kernel_taps) const {
    return kernel_taps * in_channels * out_channels + out_channels;
  }
};

std::vector<LayerSpec> layer_plan(const BackboneConfig& config);
std::size_t parameter_count(const BackboneConfig& config);
std::string parameter_breakdown(const BackboneConfig& config);

/// Network parameters theta: kernel then bias for each layer of layer_plan().
struct WeightSet {
  BackboneConfig config;
  std::vector<Tensor> tensors;

  std::size_t parameter_count() const;
  bool all_finite() const;
  friend bool operator==(const WeightSet& a, const WeightSet& b) {
    return a.config == b.config && a.tensors == b.tensors;
  }
};

/// Expected tensor shapes of a WeightSet, in storage order.
std::vector<Extents> weight_shapes(const BackboneConfig& config);

/// He-normal hidden kernels, zero biases, head kernel with std head_init_std.
WeightSet init_weights(const BackboneConfig& config, std::uint64_t seed);
WeightSet zero_weights(const BackboneConfig& config);

/// Throws ShapeError when `grid` cannot be processed by the backbone; the
/// message names the padded grid that would be accepted.
void check_input_grid(const BackboneConfig& config, const Extents& grid);

/// Velocity field [D, ...spatial] from [1, ...spatial] moving and fixed images.
Var forward(Var moving, Var fixed, std::span<const Var> weights, const BackboneConfig& config);
VectorField forward(const Volume& moving, const Volume& fixed, const WeightSet& weights);

}  // namespace sgldreg
