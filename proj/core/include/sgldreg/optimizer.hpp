#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sgldreg/tensor.hpp"

namespace sgldreg {

struct AdamConfig {
  double learning_rate = 1e-3;  // eta
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Adam moments mirroring a parameter set.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t t = 0;  // completed updates
  AdamConfig config;

  static AdamState zeros_like(std::span<const Tensor> parameters, const AdamConfig& config);
};

/// Applies one bias-corrected Adam update in place:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   theta <- theta - eta / sqrt(v_hat + eps) * m_hat.
/// The stabiliser sits inside the square root. Returns the mean of the
/// per-parameter step size eta / sqrt(v_hat + eps).
double adam_step(std::span<Tensor> parameters, std::span<const Tensor> gradients, AdamState& state);

enum class NoiseKind { None, Fixed, Decaying };

/// Whether a schedule value is the noise standard deviation or its variance.
enum class NoiseParameterization { StdDev, Variance };

/// Gradient-noise schedule for Langevin-style Adam.
///   Fixed:    value(t) = target_std
///   Decaying: value(t) = scale / (offset + t)^gamma
struct NoiseSchedule {
  NoiseKind kind = NoiseKind::None;
  double target_std = 0.0;
  double gamma = 0.55;
  double scale = 1e-3;
  double offset = 1.0;
  NoiseParameterization parameterization = NoiseParameterization::StdDev;

  static NoiseSchedule none() { return {}; }
  static NoiseSchedule fixed(double std_dev);
  /// target_std = learning_rate / 50.
  static NoiseSchedule fixed_for_learning_rate(double learning_rate);
  /// scale / (1 + t)^gamma with scale = learning_rate.
  static NoiseSchedule decaying(double learning_rate, double gamma = 0.55, double offset = 1.0);

  double value(std::size_t t) const;
  /// Standard deviation of the injected noise at iteration t.
  double std_dev(std::size_t t) const;

  void validate() const;
};

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& text);

/// g + N(0, std(t)^2) per element, t = state.t. Draws come from `rng` in
/// tensor order then element order. A zero standard deviation returns g
/// unchanged. Throws NumericError on non-finite gradients.
std::vector<Tensor> inject_noise(std::span<const Tensor> gradients, const NoiseSchedule& schedule,
                                 const AdamState& state, std::mt19937_64& rng);
std::vector<Tensor> inject_noise(std::span<const Tensor> gradients, const NoiseSchedule& schedule,
                                 const AdamState& state, std::uint64_t seed);

/// Fit of a recorded step-size trajectory s^t to c * a / (b + t)^gamma.
struct StepEnvelope {
  double a = 0.0;   // least-squares scale in log space
  double c1 = 0.0;  // min s^t / (a / (b + t)^gamma)
  double c2 = 0.0;  // max of the same ratio
  bool holds = false;
};

struct ScheduleReport {
  bool passes = false;
  std::vector<std::string> reasons;
  double partial_sum = 0.0;          // sum_{t < horizon} eps^t
  double partial_sum_squares = 0.0;  // sum_{t < horizon} (eps^t)^2
  std::optional<StepEnvelope> envelope;
};

/// Checks the Langevin step-size conditions sum eps^t = inf and
/// sum (eps^t)^2 < inf. A polynomial decay a / (b + t)^gamma satisfies both
/// iff gamma is in (0.5, 1]; a constant schedule violates the second. When a
/// trajectory of Adam step sizes (indexed from t = 0) is given, also reports
/// the envelope c1 eps^t <= s^t <= c2 eps^t with fitted constants.
ScheduleReport validate_schedule(const NoiseSchedule& schedule, std::size_t horizon,
                                 std::span<const double> step_sizes = {});

}  // namespace sgldreg
