#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sgldreg/diffeo.hpp"
#include "sgldreg/losses.hpp"
#include "sgldreg/network.hpp"
#include "sgldreg/optimizer.hpp"
#include "sgldreg/posterior.hpp"

namespace sgldreg {

struct ImagePair {
  Volume moving;
  Volume fixed;
};

struct TrainingData {
  std::vector<ImagePair> train;
  std::vector<ImagePair> validation;
};

struct TrainingConfig {
  BackboneConfig backbone;
  LossConfig loss;
  AdamConfig adam;
  NoiseSchedule noise;
  IntegrationConfig integration;
  std::size_t iterations = 4000;           // N
  std::optional<std::size_t> burn_in;      // t_b, defaults to N - 8
  std::size_t validation_interval = 50;
  std::size_t max_validation_pairs = 8;
  SnapshotWeighting weighting = SnapshotWeighting::NegativeLoss;
  std::uint64_t seed = 0;

  std::size_t burn_in_iteration() const;
  void validate() const;
};

/// One row of the loss curve. Iteration t uses weights theta^t for the
/// training loss; the validation loss (NaN when not evaluated) is that of
/// theta^{t+1}, the weights after the update.
struct LossRecord {
  std::size_t iteration = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double noise_std = 0.0;
  double step_size = 0.0;
};

struct TrainingResult {
  SnapshotStore store;
  std::vector<LossRecord> curve;
  double initial_validation_loss = 0.0;
  WeightSet final_weights;
  ScheduleReport schedule_report;
};

using ProgressCallback = std::function<void(const LossRecord&)>;

/// Mean total loss of `weights` over up to `max_pairs` pairs.
double validation_loss(const WeightSet& weights, std::span<const ImagePair> pairs, const LossConfig& loss,
                       std::size_t integration_steps, std::size_t max_pairs);

/// Langevin-Adam training: every iteration draws a training pair, computes
/// the loss gradient, perturbs it with the noise schedule and applies Adam.
/// The weights after each update t in [t_b, N) are kept as snapshots together
/// with their validation loss. Throws NumericError on a non-finite loss.
TrainingResult train(const TrainingData& data, const TrainingConfig& config,
                     const ProgressCallback& progress = {});

/// CSV with header iteration,train_loss,val_loss,noise_std,step_size. Missing
/// validation losses are written as empty fields.
void write_loss_curve(std::ostream& out, std::span<const LossRecord> curve);

}  // namespace sgldreg
