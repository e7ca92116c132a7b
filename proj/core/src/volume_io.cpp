#include "sgldreg/volume_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "io_util.hpp"
#include "sgldreg/error.hpp"

namespace sgldreg {

namespace {

constexpr const char* kMagic = "SGLDVOL 1";

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  return in;
}

}  // namespace

void write_field(std::ostream& out, const Tensor& data, Precision precision) {
  if (data.rank() < 2) throw ShapeError("volume file needs a [C, ...spatial] tensor, got " + to_string(data.shape()));
  out << kMagic << "\ndims";
  for (std::size_t a = 1; a < data.rank(); ++a) out << ' ' << data.extent(a);
  out << "\ncomponents " << data.extent(0) << "\nprecision " << (precision == Precision::Float32 ? 32 : 64)
      << "\nbyte_order little\nend\n";
  for (double v : data.values()) {
    if (precision == Precision::Float32) {
      detail::write_le(out, static_cast<float>(v));
    } else {
      detail::write_le(out, v);
    }
  }
  if (!out) throw ConfigError("write failed");
}

Tensor read_field(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kMagic) throw ConfigError("not a volume file");
  Extents dims;
  std::size_t components = 0;
  int bits = 0;
  std::string order;
  while (true) {
    if (!std::getline(in, line)) throw ConfigError("volume header is not terminated by 'end'");
    line = detail::trim(line);
    if (line == "end") break;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "dims") {
      std::size_t n = 0;
      while (ss >> n) dims.push_back(n);
    } else if (key == "components") {
      ss >> components;
    } else if (key == "precision") {
      ss >> bits;
    } else if (key == "byte_order") {
      ss >> order;
    } else {
      throw ConfigError("unknown volume header key '" + key + "'");
    }
  }
  if (dims.empty() || dims.size() > 3) throw ConfigError("volume must have 1 to 3 dims");
  if (components == 0) throw ConfigError("volume has no components");
  if (bits != 32 && bits != 64) throw ConfigError("volume precision must be 32 or 64");
  if (order != "little") throw ConfigError("unsupported byte order '" + order + "'");
  Extents shape{components};
  shape.insert(shape.end(), dims.begin(), dims.end());
  Tensor t(shape);
  for (double& v : t.values()) {
    v = bits == 32 ? static_cast<double>(detail::read_le<float>(in)) : detail::read_le<double>(in);
  }
  return t;
}

void save_field(const std::filesystem::path& path, const Tensor& data, Precision precision) {
  auto out = open_out(path);
  write_field(out, data, precision);
}

Tensor load_field(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_field(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_volume(const std::filesystem::path& path, const Volume& volume, Precision precision) {
  save_field(path, volume.tensor(), precision);
}

Volume load_volume(const std::filesystem::path& path) {
  Tensor t = load_field(path);
  if (t.extent(0) != 1) throw ShapeError(path.string() + ": expected a single-component image");
  return Volume(std::move(t));
}

void save_vector_field(const std::filesystem::path& path, const VectorField& field, Precision precision) {
  save_field(path, field.tensor(), precision);
}

VectorField load_vector_field(const std::filesystem::path& path) {
  Tensor t = load_field(path);
  if (t.extent(0) != t.rank() - 1) throw ShapeError(path.string() + ": component count does not match dims");
  return VectorField(std::move(t));
}

void save_pgm(const std::filesystem::path& path, const Tensor& data) {
  if (data.rank() != 3) throw ShapeError("pgm export needs a 2D [C, H, W] tensor, got " + to_string(data.shape()));
  const std::size_t h = data.extent(1), w = data.extent(2);
  const auto first = data.values().subspan(0, h * w);
  const auto [lo, hi] = std::minmax_element(first.begin(), first.end());
  const double range = *hi - *lo;
  auto out = open_out(path);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  for (double v : first) {
    const double s = range > 0.0 ? (v - *lo) / range : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * s))));
  }
}

}  // namespace sgldreg
