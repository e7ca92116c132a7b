#include "sgldreg/training.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "sgldreg/error.hpp"

namespace sgldreg {

std::size_t TrainingConfig::burn_in_iteration() const {
  if (burn_in) return *burn_in;
  return iterations > 8 ? iterations - 8 : 0;
}

void TrainingConfig::validate() const {
  backbone.validate();
  loss.validate();
  adam.validate();
  noise.validate();
  integration.validate();
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (burn_in_iteration() >= iterations) {
    throw ConfigError("burn-in t_b = " + std::to_string(burn_in_iteration()) +
                      " must be smaller than the number of iterations N = " + std::to_string(iterations));
  }
  if (validation_interval == 0) throw ConfigError("validation_interval must be positive");
}

double validation_loss(const WeightSet& weights, std::span<const ImagePair> pairs, const LossConfig& loss,
                       std::size_t integration_steps, std::size_t max_pairs) {
  const std::size_t n = std::min(pairs.size(), max_pairs);
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const VectorField v = forward(pairs[i].moving, pairs[i].fixed, weights);
    total += total_loss(pairs[i].moving, pairs[i].fixed, v, weights.tensors, loss, integration_steps);
  }
  return total / static_cast<double>(n);
}

TrainingResult train(const TrainingData& data, const TrainingConfig& config, const ProgressCallback& progress) {
  config.validate();
  if (data.train.empty()) throw ConfigError("training set is empty");
  const auto& val_pairs = data.validation.empty() ? data.train : data.validation;

  std::seed_seq seeds{config.seed, std::uint64_t{0x5eed}};
  std::array<std::uint64_t, 3> streams{};
  seeds.generate(streams.begin(), streams.end());
  std::mt19937_64 pair_rng(streams[1]);
  std::mt19937_64 noise_rng(streams[2]);

  TrainingResult result;
  WeightSet weights = init_weights(config.backbone, config.seed);
  AdamState adam = AdamState::zeros_like(weights.tensors, config.adam);
  const std::size_t steps = config.integration.steps;
  const std::size_t burn_in = config.burn_in_iteration();
  result.store.integration_steps = steps;
  result.store.weighting = config.weighting;
  result.initial_validation_loss =
      validation_loss(weights, val_pairs, config.loss, steps, config.max_validation_pairs);

  std::uniform_int_distribution<std::size_t> pick(0, data.train.size() - 1);
  std::vector<double> step_sizes;
  step_sizes.reserve(config.iterations);
  Tape tape;
  for (std::size_t t = 0; t < config.iterations; ++t) {
    const ImagePair& pair = data.train[pick(pair_rng)];
    tape.clear();
    std::vector<Var> params;
    params.reserve(weights.tensors.size());
    for (const Tensor& w : weights.tensors) params.push_back(tape.variable(w));
    Var moving = tape.constant(pair.moving.tensor());
    Var fixed = tape.constant(pair.fixed.tensor());
    Var velocity = forward(moving, fixed, params, config.backbone);
    LossTerms terms = total_loss(moving, fixed, velocity, params, config.loss, steps);
    const double loss = terms.total.value().item();
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite training loss at iteration " + std::to_string(t));
    }
    tape.backward(terms.total);
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const Var& p : params) grads.push_back(tape.gradient(p));

    LossRecord rec;
    rec.iteration = t;
    rec.train_loss = loss;
    rec.noise_std = config.noise.std_dev(adam.t);
    const auto noisy = inject_noise(grads, config.noise, adam, noise_rng);
    rec.step_size = adam_step(weights.tensors, noisy, adam);
    step_sizes.push_back(rec.step_size);
    if (!weights.all_finite()) throw NumericError("non-finite weights after iteration " + std::to_string(t));

    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    const bool snapshot = t >= burn_in;
    if (snapshot || (t + 1) % config.validation_interval == 0 || t + 1 == config.iterations) {
      rec.val_loss = validation_loss(weights, val_pairs, config.loss, steps, config.max_validation_pairs);
      if (!std::isfinite(rec.val_loss)) {
        throw NumericError("non-finite validation loss at iteration " + std::to_string(t));
      }
    }
    if (snapshot) result.store.snapshots.push_back({t, rec.val_loss, weights});
    result.curve.push_back(rec);
    if (progress) progress(rec);
  }
  result.final_weights = std::move(weights);
  result.schedule_report = validate_schedule(config.noise, config.iterations, step_sizes);
  return result;
}

void write_loss_curve(std::ostream& out, std::span<const LossRecord> curve) {
  out << "iteration,train_loss,val_loss,noise_std,step_size\n";
  char buf[64];
  for (const auto& r : curve) {
    out << r.iteration << ',';
    std::snprintf(buf, sizeof buf, "%.10g", r.train_loss);
    out << buf << ',';
    if (std::isfinite(r.val_loss)) {
      std::snprintf(buf, sizeof buf, "%.10g", r.val_loss);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g\n", r.noise_std, r.step_size);
    out << buf;
  }
}

}  // namespace sgldreg
