#pragma once

#include <cstddef>
#include <span>

#include "sgldreg/field.hpp"
#include "sgldreg/tape.hpp"

namespace sgldreg {

enum class RegularizedField { Velocity, Deformation };

struct LossConfig {
  std::size_t lcc_window = 9;
  double lambda_smooth = 0.1;
  double weight_decay = 1e-7;
  double epsilon_var = 1e-5;
  /// Which field the gradient penalty acts on.
  RegularizedField regularize = RegularizedField::Velocity;

  void validate() const;
};

/// Mean over voxels of the squared local normalized cross-correlation,
/// cross^2 / (var_a * var_b + eps), with window statistics taken over a
/// `window`^D neighbourhood truncated at the grid border. Lies in [0, 1].
Var lcc(Var a, Var b, std::size_t window, double epsilon_var = 1e-5);
double lcc(const Volume& a, const Volume& b, std::size_t window, double epsilon_var = 1e-5);

/// Mean squared forward difference of a [C, ...spatial] field, averaged over
/// components and voxels per axis, then over spatial axes.
Var smoothness(Var field);
double smoothness(const Tensor& field);

struct LossTerms {
  Var total;
  Var similarity;      // -lcc(fixed, warped moving)
  Var regularization;  // smoothness term before the lambda factor
  Var decay;           // sum of squared weights before the decay factor
};

/// -lcc(fixed, moving o exp(velocity)) + lambda * smoothness + decay * |theta|^2.
/// `weights` may be empty, which drops the decay term.
LossTerms total_loss(Var moving, Var fixed, Var velocity, std::span<const Var> weights,
                     const LossConfig& cfg, std::size_t integration_steps);

double total_loss(const Volume& moving, const Volume& fixed, const VectorField& velocity,
                  std::span<const Tensor> weights, const LossConfig& cfg,
                  std::size_t integration_steps);

}  // namespace sgldreg
