#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "sgldreg/field.hpp"
#include "sgldreg/network.hpp"

namespace sgldreg {

/// How validation losses become posterior weights.
enum class SnapshotWeighting {
  NegativeLoss,  // w = max(-L, floor): losses are negative, lower loss weighs more
  Softmax,       // w = softmax(-L)
};

/// Which entropy-like map is reported for a variance.
enum class EntropyForm {
  AsPrinted,  // 0.5 log(2 pi var)
  Gaussian,   // 0.5 log(2 pi e var)
};

struct UncertaintyOptions {
  double floor = 1e-12;
  EntropyForm form = EntropyForm::AsPrinted;
};

struct Snapshot {
  std::size_t iteration = 0;
  double validation_loss = 0.0;
  WeightSet weights;
};

/// Weights saved after burn-in together with their validation losses.
struct SnapshotStore {
  std::vector<Snapshot> snapshots;
  std::size_t integration_steps = 6;
  SnapshotWeighting weighting = SnapshotWeighting::NegativeLoss;

  std::size_t size() const noexcept { return snapshots.size(); }
  /// Unnormalised posterior weights in snapshot order.
  std::vector<double> posterior_weights() const;
};

std::vector<double> snapshot_weights(std::span<const double> validation_losses, SnapshotWeighting weighting,
                                     double floor = 1e-8);

std::string to_string(SnapshotWeighting weighting);
SnapshotWeighting parse_snapshot_weighting(const std::string& text);

/// Store directory: one checkpoint per snapshot plus `snapshots.txt`:
///
///   # sgldreg snapshot store
///   integration_steps <T>
///   weighting negative_loss|softmax
///   snapshot <iteration> <validation_loss> <checkpoint file name>
///   ...
void save_store(const std::filesystem::path& directory, const SnapshotStore& store);
SnapshotStore load_store(const std::filesystem::path& directory);

/// One velocity field per snapshot, in store order.
std::vector<VectorField> sample_velocities(const Volume& moving, const Volume& fixed,
                                           const SnapshotStore& store);

VectorField weighted_mean(std::span<const VectorField> fields, std::span<const double> weights);
/// Weighted per-voxel, per-component variance about the weighted mean.
VectorField variance(std::span<const VectorField> fields, std::span<const double> weights);
/// Elementwise 0.5 log(2 pi max(var, floor)), or the Gaussian-entropy form.
VectorField uncertainty(const VectorField& variance, const UncertaintyOptions& options = {});

/// Integrates every velocity, then applies variance() and uncertainty() to the
/// resulting displacements.
VectorField deformation_uncertainty(std::span<const VectorField> fields, std::span<const double> weights,
                                    std::size_t integration_steps, const UncertaintyOptions& options = {});

struct PosteriorSummary {
  VectorField mean_velocity;
  VectorField variance;
  VectorField uncertainty;
};

PosteriorSummary summarize(std::span<const VectorField> fields, std::span<const double> weights,
                           const UncertaintyOptions& options = {});

struct RegistrationResult {
  Volume registered;
  VectorField deformation;  // displacement of exp(mean velocity)
  PosteriorSummary summary;
};

/// Posterior-mean registration of `moving` onto `fixed`.
RegistrationResult register_images(const Volume& moving, const Volume& fixed, const SnapshotStore& store,
                                   const UncertaintyOptions& options = {});

}  // namespace sgldreg
