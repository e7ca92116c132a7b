#pragma once

#include <filesystem>
#include <iosfwd>

#include "sgldreg/network.hpp"

namespace sgldreg {

/// Weight checkpoint layout, all integers and reals little-endian:
///
///   8 bytes   magic "SGLDCKPT"
///   u32       format version (1)
///   u32       header length H
///   H bytes   header text, one "key=value" per line: spatial_dims,
///             encoder_channels, decoder_channels (comma separated),
///             leaky_slope, kernel_size, head_init_std, precision (32|64),
///             tensors (count)
///   per tensor, in WeightSet order:
///     u32 rank, u32 extent[rank], then prod(extent) reals of `precision` bits
void write_checkpoint(std::ostream& out, const WeightSet& weights, Precision precision = Precision::Float64);
WeightSet read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const WeightSet& weights,
                     Precision precision = Precision::Float64);
WeightSet load_checkpoint(const std::filesystem::path& path);

}  // namespace sgldreg
