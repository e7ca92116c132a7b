#pragma once

#include <filesystem>
#include <iosfwd>

#include "sgldreg/field.hpp"

namespace sgldreg {

/// Volume file: a text header closed by a line "end", then the raw payload.
///
///   SGLDVOL 1
///   dims 64 64
///   components 1
///   precision 32|64
///   byte_order little
///   end
///
/// The payload holds components * prod(dims) little-endian IEEE reals,
/// component-major and row-major within a component (the last dim varies
/// fastest). Images have one component, deformation fields one per spatial
/// axis, label files one binary component per label.
void write_field(std::ostream& out, const Tensor& data, Precision precision = Precision::Float64);
Tensor read_field(std::istream& in);

void save_field(const std::filesystem::path& path, const Tensor& data, Precision precision = Precision::Float64);
Tensor load_field(const std::filesystem::path& path);

void save_volume(const std::filesystem::path& path, const Volume& volume, Precision precision = Precision::Float64);
Volume load_volume(const std::filesystem::path& path);
void save_vector_field(const std::filesystem::path& path, const VectorField& field,
                       Precision precision = Precision::Float64);
VectorField load_vector_field(const std::filesystem::path& path);

/// Binary (P5) portable graymap of component 0 of a 2D [C, H, W] tensor,
/// linearly mapped from its [min, max] to [0, 255].
void save_pgm(const std::filesystem::path& path, const Tensor& data);

}  // namespace sgldreg
