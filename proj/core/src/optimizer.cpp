#include "sgldreg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgldreg/error.hpp"

namespace sgldreg {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in (0, 1)");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
}

AdamState AdamState::zeros_like(std::span<const Tensor> parameters, const AdamConfig& config) {
  config.validate();
  AdamState s;
  s.config = config;
  for (const Tensor& p : parameters) {
    s.m.emplace_back(p.shape(), 0.0);
    s.v.emplace_back(p.shape(), 0.0);
  }
  return s;
}

double adam_step(std::span<Tensor> parameters, std::span<const Tensor> gradients, AdamState& state) {
  if (parameters.size() != gradients.size() || parameters.size() != state.m.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  const AdamConfig& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double m_correction = 1.0 - std::pow(c.beta1, t);
  const double v_correction = 1.0 - std::pow(c.beta2, t);

  double step_total = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < parameters.size(); ++k) {
    Tensor& theta = parameters[k];
    const Tensor& g = gradients[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    if (theta.shape() != g.shape() || theta.shape() != m.shape()) {
      throw ShapeError("adam_step: shape mismatch in parameter " + std::to_string(k));
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / m_correction;
      const double v_hat = v[i] / v_correction;
      const double step = c.learning_rate / std::sqrt(v_hat + c.epsilon);
      theta[i] -= step * m_hat;
      step_total += step;
    }
    count += theta.size();
  }
  return count ? step_total / static_cast<double>(count) : 0.0;
}

NoiseSchedule NoiseSchedule::fixed(double std_dev) {
  NoiseSchedule s;
  s.kind = NoiseKind::Fixed;
  s.target_std = std_dev;
  return s;
}

NoiseSchedule NoiseSchedule::fixed_for_learning_rate(double learning_rate) {
  return fixed(learning_rate / 50.0);
}

NoiseSchedule NoiseSchedule::decaying(double learning_rate, double gamma, double offset) {
  NoiseSchedule s;
  s.kind = NoiseKind::Decaying;
  s.scale = learning_rate;
  s.gamma = gamma;
  s.offset = offset;
  return s;
}

double NoiseSchedule::value(std::size_t t) const {
  switch (kind) {
    case NoiseKind::None:
      return 0.0;
    case NoiseKind::Fixed:
      return target_std;
    case NoiseKind::Decaying:
      return scale / std::pow(offset + static_cast<double>(t), gamma);
  }
  return 0.0;
}

double NoiseSchedule::std_dev(std::size_t t) const {
  const double v = value(t);
  return parameterization == NoiseParameterization::StdDev ? v : std::sqrt(v);
}

void NoiseSchedule::validate() const {
  if (kind == NoiseKind::Fixed && !(target_std >= 0.0)) throw ConfigError("noise std must be non-negative");
  if (kind == NoiseKind::Decaying) {
    if (!(scale >= 0.0)) throw ConfigError("noise scale must be non-negative");
    if (!(gamma > 0.0)) throw ConfigError("noise gamma must be positive");
    if (!(offset > 0.0)) throw ConfigError("noise offset must be positive");
  }
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None:
      return "none";
    case NoiseKind::Fixed:
      return "fixed";
    case NoiseKind::Decaying:
      return "decaying";
  }
  return "none";
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "none") return NoiseKind::None;
  if (text == "fixed") return NoiseKind::Fixed;
  if (text == "decaying") return NoiseKind::Decaying;
  throw ConfigError("unknown noise schedule '" + text + "' (expected none, fixed or decaying)");
}

std::vector<Tensor> inject_noise(std::span<const Tensor> gradients, const NoiseSchedule& schedule,
                                 const AdamState& state, std::mt19937_64& rng) {
  std::vector<Tensor> noisy(gradients.begin(), gradients.end());
  for (std::size_t k = 0; k < noisy.size(); ++k) {
    if (!noisy[k].all_finite()) {
      throw NumericError("non-finite gradient in parameter tensor " + std::to_string(k) +
                         " at iteration " + std::to_string(state.t));
    }
  }
  const double sd = schedule.std_dev(state.t);
  if (sd == 0.0) return noisy;
  std::normal_distribution<double> normal(0.0, sd);
  for (Tensor& g : noisy) {
    for (double& v : g.values()) v += normal(rng);
  }
  return noisy;
}

std::vector<Tensor> inject_noise(std::span<const Tensor> gradients, const NoiseSchedule& schedule,
                                 const AdamState& state, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return inject_noise(gradients, schedule, state, rng);
}

ScheduleReport validate_schedule(const NoiseSchedule& schedule, std::size_t horizon,
                                 std::span<const double> step_sizes) {
  ScheduleReport report;
  for (std::size_t t = 0; t < horizon; ++t) {
    const double e = schedule.value(t);
    report.partial_sum += e;
    report.partial_sum_squares += e * e;
  }

  double gamma = 0.0;
  double offset = 1.0;
  switch (schedule.kind) {
    case NoiseKind::None:
      report.reasons.push_back("zero schedule: Σε^t = ∞ violated (every term is zero)");
      break;
    case NoiseKind::Fixed:
      if (schedule.target_std == 0.0) {
        report.reasons.push_back("zero schedule: Σε^t = ∞ violated (every term is zero)");
      } else {
        report.reasons.push_back(
            "constant schedule: Σ(ε^t)² < ∞ violated (squared terms are constant, so their sum diverges)");
      }
      break;
    case NoiseKind::Decaying:
      gamma = schedule.gamma;
      offset = schedule.offset;
      if (gamma <= 0.5) {
        report.reasons.push_back("decay exponent γ = " + std::to_string(gamma) +
                                 " <= 0.5: Σ(ε^t)² < ∞ violated (Σ(b+t)^(-2γ) diverges)");
      }
      if (gamma > 1.0) {
        report.reasons.push_back("decay exponent γ = " + std::to_string(gamma) +
                                 " > 1: Σε^t = ∞ violated (Σ(b+t)^(-γ) converges)");
      }
      if (schedule.scale <= 0.0) report.reasons.push_back("zero scale: Σε^t = ∞ violated");
      break;
  }
  report.passes = report.reasons.empty();

  if (!step_sizes.empty()) {
    // log s^t = log a - gamma log(b + t) + r_t; least squares over log a.
    StepEnvelope env;
    double log_a = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < step_sizes.size(); ++t) {
      if (!(step_sizes[t] > 0.0) || !std::isfinite(step_sizes[t])) continue;
      log_a += std::log(step_sizes[t]) + gamma * std::log(offset + static_cast<double>(t));
      ++n;
    }
    if (n > 0) {
      env.a = std::exp(log_a / static_cast<double>(n));
      env.c1 = std::numeric_limits<double>::infinity();
      env.c2 = 0.0;
      for (std::size_t t = 0; t < step_sizes.size(); ++t) {
        const double reference = env.a / std::pow(offset + static_cast<double>(t), gamma);
        const double ratio = step_sizes[t] / reference;
        env.c1 = std::min(env.c1, ratio);
        env.c2 = std::max(env.c2, ratio);
      }
      env.holds = env.c1 > 0.0 && std::isfinite(env.c2);
    }
    report.envelope = env;
  }
  return report;
}

}  // namespace sgldreg
