#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "sgldreg/posterior.hpp"
#include "sgldreg/training.hpp"

namespace sgldreg {

/// Everything a batch run needs, read from an INI file:
///
///   [run]          seed
///   [data]         manifest, output_dir
///   [backbone]     spatial_dims, encoder_channels, decoder_channels,
///                  leaky_slope, kernel_size, head_init_std
///   [loss]         lcc_window, lambda_smooth, weight_decay, epsilon_var,
///                  regularize = velocity|deformation
///   [optimizer]    learning_rate, beta1, beta2, epsilon
///   [noise]        kind = fixed (default)|decaying|none, std, gamma, scale, offset,
///                  parameterization = std|variance
///   [training]     iterations, burn_in, validation_interval,
///                  max_validation_pairs, checkpoint_precision = 32|64
///   [integration]  steps
///   [posterior]    weighting = negative_loss|softmax,
///                  entropy = printed|gaussian, floor, identity_threshold
///
/// Every key is optional. Relative paths resolve against the file's directory.
struct RunConfig {
  TrainingConfig training;
  UncertaintyOptions uncertainty;
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "run";
  Precision checkpoint_precision = Precision::Float64;
  /// Mean |u| (voxels) below which a registration counts as the identity.
  double identity_threshold = 0.5;

  void validate() const;
};

/// Parses and validates. Throws ConfigError on syntax errors, unknown keys,
/// out-of-range values or a manifest path that does not exist.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir);

}  // namespace sgldreg
