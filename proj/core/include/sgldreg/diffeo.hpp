#pragma once

#include <cstddef>

#include "sgldreg/field.hpp"
#include "sgldreg/tape.hpp"

namespace sgldreg {

struct IntegrationConfig {
  std::size_t steps = 6;

  void validate() const;
};

// Differentiable forms, recorded on the tape of their inputs.

/// Scaling and squaring of a stationary velocity field [D, ...spatial]:
/// u <- v / 2^steps, then `steps` self-compositions u <- u + u(p + u).
/// Returns the displacement of the time-1 flow.
Var integrate(Var velocity, std::size_t steps);

/// Displacement of outer o inner: u_inner(p) + u_outer(p + u_inner(p)).
Var compose(Var outer, Var inner);

/// Image resampled at p + u(p) by D-linear interpolation.
Var warp(Var image, Var displacement);

// Value forms.

VectorField integrate(const VectorField& velocity, std::size_t steps);
VectorField compose(const VectorField& outer, const VectorField& inner);
Volume warp(const Volume& image, const VectorField& deformation);

}  // namespace sgldreg
