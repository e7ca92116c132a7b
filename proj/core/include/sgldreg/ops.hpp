#pragma once

#include <cstddef>

#include "sgldreg/tape.hpp"

namespace sgldreg {

enum class Padding { Same, Valid };

// Elementwise arithmetic. Shapes must match exactly (no broadcasting).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

// Reductions to a single-element tensor of shape [1].
Var sum(Var a);
Var mean(Var a);
Var sum_squares(Var a);

/// Cross-correlation of a [Cin, ...spatial] input with a [Cout, Cin, ...kernel]
/// kernel plus a [Cout] bias. Stride applies to every spatial axis. Same
/// padding uses implicit zeros and yields ceil(n / stride) outputs per axis;
/// when the total padding is odd the extra zero goes after the data.
Var conv(Var input, Var kernel, Var bias, std::size_t stride, Padding padding);

Var leaky_relu(Var x, double slope);

/// Replicates every voxel factor^D times (D = spatial rank).
Var upsample_nearest(Var x, std::size_t factor);

/// Concatenates along the channel axis. An empty `b` returns `a` unchanged.
Var concat_channels(Var a, Var b);

/// Per-channel sum over an odd, centred window of `window` voxels per spatial
/// axis with zero padding. The operator is self-adjoint.
Var box_sum(Var x, std::size_t window);

/// Samples `source` ([C, ...spatial]) at p + displacement(p) with D-linear
/// interpolation. `displacement` has one component per spatial axis, in axis
/// order and voxel units. Sample coordinates are clamped to the grid, so the
/// gradient with respect to a clamped coordinate is zero.
Var grid_sample(Var source, Var displacement);

}  // namespace sgldreg
