#include "sgldreg/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "io_util.hpp"
#include "sgldreg/error.hpp"

namespace sgldreg {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'G', 'L', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void write_checkpoint(std::ostream& out, const WeightSet& weights, Precision precision) {
  const BackboneConfig& c = weights.config;
  std::ostringstream header;
  header << "spatial_dims=" << c.spatial_dims << '\n'
         << "encoder_channels=" << detail::format_size_list(c.encoder_channels) << '\n'
         << "decoder_channels=" << detail::format_size_list(c.decoder_channels) << '\n'
         << "leaky_slope=" << format_real(c.leaky_slope) << '\n'
         << "kernel_size=" << c.kernel_size << '\n'
         << "head_init_std=" << format_real(c.head_init_std) << '\n'
         << "precision=" << (precision == Precision::Float32 ? 32 : 64) << '\n'
         << "tensors=" << weights.tensors.size() << '\n';
  const std::string text = header.str();

  out.write(kMagic.data(), kMagic.size());
  detail::write_le<std::uint32_t>(out, kVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Tensor& t : weights.tensors) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e));
    for (double v : t.values()) {
      if (precision == Precision::Float32) {
        detail::write_le<float>(out, static_cast<float>(v));
      } else {
        detail::write_le<double>(out, v);
      }
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

WeightSet read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ConfigError("not a checkpoint file (bad magic)");
  }
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = detail::read_le<std::uint32_t>(in);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) throw ConfigError("truncated checkpoint header");

  std::map<std::string, std::string> kv;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  auto get = [&kv](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("checkpoint header lacks '" + key + "'");
    return it->second;
  };

  WeightSet w;
  try {
    w.config.spatial_dims = std::stoul(get("spatial_dims"));
    w.config.encoder_channels = detail::parse_size_list(get("encoder_channels"));
    w.config.decoder_channels = detail::parse_size_list(get("decoder_channels"));
    w.config.leaky_slope = std::stod(get("leaky_slope"));
    w.config.kernel_size = std::stoul(get("kernel_size"));
    w.config.head_init_std = std::stod(get("head_init_std"));
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(std::string("malformed checkpoint header: ") + e.what());
  }
  w.config.validate();
  const std::string precision = get("precision");
  if (precision != "32" && precision != "64") throw ConfigError("checkpoint precision must be 32 or 64");
  const bool single = precision == "32";

  const auto expected = weight_shapes(w.config);
  if (std::stoul(get("tensors")) != expected.size()) {
    throw ConfigError("checkpoint tensor count does not match its backbone configuration");
  }
  for (const Extents& shape : expected) {
    const auto rank = detail::read_le<std::uint32_t>(in);
    Extents stored(rank);
    for (auto& e : stored) e = detail::read_le<std::uint32_t>(in);
    if (stored != shape) {
      throw ConfigError("checkpoint tensor shape " + to_string(stored) + " expected " + to_string(shape));
    }
    Tensor t(shape);
    for (double& v : t.values()) {
      v = single ? static_cast<double>(detail::read_le<float>(in)) : detail::read_le<double>(in);
    }
    w.tensors.push_back(std::move(t));
  }
  return w;
}

void save_checkpoint(const std::filesystem::path& path, const WeightSet& weights, Precision precision) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, weights, precision);
}

WeightSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace sgldreg
