#include "sgldreg/diffeo.hpp"

#include <cmath>

#include "sgldreg/error.hpp"
#include "sgldreg/ops.hpp"

namespace sgldreg {

void IntegrationConfig::validate() const {
  if (steps < 1) throw ConfigError("integration steps must be >= 1");
}

Var integrate(Var velocity, std::size_t steps) {
  if (steps < 1) throw ConfigError("integration steps must be >= 1");
  Var u = scale(velocity, std::ldexp(1.0, -static_cast<int>(steps)));
  for (std::size_t i = 0; i < steps; ++i) u = compose(u, u);
  return u;
}

Var compose(Var outer, Var inner) { return add(inner, grid_sample(outer, inner)); }

Var warp(Var image, Var displacement) { return grid_sample(image, displacement); }

VectorField integrate(const VectorField& velocity, std::size_t steps) {
  Tape tape;
  return VectorField(integrate(tape.constant(velocity.tensor()), steps).value());
}

VectorField compose(const VectorField& outer, const VectorField& inner) {
  Tape tape;
  return VectorField(compose(tape.constant(outer.tensor()), tape.constant(inner.tensor())).value());
}

Volume warp(const Volume& image, const VectorField& deformation) {
  Tape tape;
  return Volume(warp(tape.constant(image.tensor()), tape.constant(deformation.tensor())).value());
}

}  // namespace sgldreg
