#include "sgldreg/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "sgldreg/error.hpp"
#include "sgldreg/ops.hpp"

namespace sgldreg {

void BackboneConfig::validate() const {
  if (spatial_dims < 1 || spatial_dims > 3) throw ConfigError("spatial_dims must be 1, 2 or 3");
  if (encoder_channels.size() < 2) throw ConfigError("encoder needs at least two layers");
  if (decoder_channels.empty()) throw ConfigError("decoder needs at least one layer");
  for (auto c : encoder_channels)
    if (c == 0) throw ConfigError("encoder channel counts must be positive");
  for (auto c : decoder_channels)
    if (c == 0) throw ConfigError("decoder channel counts must be positive");
  if (encoder_channels.back() != decoder_channels.front()) {
    throw ConfigError("the bottleneck is the last encoder and first decoder layer; widths " +
                      std::to_string(encoder_channels.back()) + " and " +
                      std::to_string(decoder_channels.front()) + " differ");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must be in (0, 1)");
  if (kernel_size == 0 || kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd");
  if (!(head_init_std >= 0.0)) throw ConfigError("head_init_std must be non-negative");
}

std::vector<LayerSpec> layer_plan(const BackboneConfig& config) {
  config.validate();
  std::vector<LayerSpec> plan;
  const std::size_t levels = config.downsampling_levels();
  std::size_t channels = 2;  // moving and fixed
  for (std::size_t i = 0; i < levels; ++i) {
    plan.push_back({"encoder" + std::to_string(i), channels, config.encoder_channels[i], 2, 1,
                    LayerSpec::kNoSkip, true});
    channels = config.encoder_channels[i];
  }
  plan.push_back({"bottleneck", channels, config.encoder_channels.back(), 1, 1, LayerSpec::kNoSkip, true});
  channels = config.encoder_channels.back();

  std::size_t level = levels;
  for (std::size_t j = 1; j < config.decoder_channels.size(); ++j) {
    LayerSpec layer{"decoder" + std::to_string(j), channels, config.decoder_channels[j], 1, 1,
                    LayerSpec::kNoSkip, true};
    if (level > 1) {
      layer.upsample = 2;
      layer.skip = static_cast<int>(level - 2);
      layer.in_channels += config.encoder_channels[level - 2];
      --level;
    }
    plan.push_back(layer);
    channels = layer.out_channels;
  }
  plan.push_back({"head", channels + 2, config.output_channels(), 1, std::size_t{1} << level,
                  LayerSpec::kInputSkip, false});
  return plan;
}

namespace {

std::size_t kernel_taps(const BackboneConfig& c) {
  std::size_t taps = 1;
  for (std::size_t d = 0; d < c.spatial_dims; ++d) taps *= c.kernel_size;
  return taps;
}

}  // namespace

std::size_t parameter_count(const BackboneConfig& config) {
  const std::size_t taps = kernel_taps(config);
  std::size_t total = 0;
  for (const auto& layer : layer_plan(config)) total += layer.parameter_count(taps);
  return total;
}

std::string parameter_breakdown(const BackboneConfig& config) {
  const std::size_t taps = kernel_taps(config);
  std::ostringstream os;
  std::size_t total = 0;
  for (const auto& l : layer_plan(config)) {
    const std::size_t n = l.parameter_count(taps);
    total += n;
    os << l.name << ": " << l.in_channels << " -> " << l.out_channels << ", stride " << l.stride;
    if (l.upsample > 1) os << ", upsample x" << l.upsample;
    if (l.skip >= 0) os << ", skip encoder" << l.skip;
    if (l.skip == LayerSpec::kInputSkip) os << ", skip input";
    os << ", params " << n << '\n';
  }
  os << "total: " << total << '\n';
  return os.str();
}

std::vector<Extents> weight_shapes(const BackboneConfig& config) {
  std::vector<Extents> shapes;
  for (const auto& l : layer_plan(config)) {
    Extents k{l.out_channels, l.in_channels};
    for (std::size_t d = 0; d < config.spatial_dims; ++d) k.push_back(config.kernel_size);
    shapes.push_back(k);
    shapes.push_back({l.out_channels});
  }
  return shapes;
}

std::size_t WeightSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

bool WeightSet::all_finite() const {
  for (const auto& t : tensors)
    if (!t.all_finite()) return false;
  return true;
}

WeightSet zero_weights(const BackboneConfig& config) {
  WeightSet w{config, {}};
  for (auto& shape : weight_shapes(config)) w.tensors.emplace_back(shape, 0.0);
  return w;
}

WeightSet init_weights(const BackboneConfig& config, std::uint64_t seed) {
  WeightSet w = zero_weights(config);
  std::mt19937_64 rng(seed);
  const auto plan = layer_plan(config);
  const std::size_t taps = kernel_taps(config);
  for (std::size_t l = 0; l < plan.size(); ++l) {
    Tensor& kernel = w.tensors[2 * l];
    const double std_dev = plan[l].activation
                               ? std::sqrt(2.0 / static_cast<double>(taps * plan[l].in_channels))
                               : config.head_init_std;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : kernel.values()) v = std_dev * normal(rng);
  }
  return w;
}

void check_input_grid(const BackboneConfig& config, const Extents& grid) {
  if (grid.size() != config.spatial_dims) {
    throw ShapeError("backbone expects " + std::to_string(config.spatial_dims) +
                     " spatial axes, got grid " + to_string(grid));
  }
  const std::size_t div = config.required_divisor();
  Extents padded = grid;
  bool ok = true;
  for (auto& e : padded) {
    if (e % div != 0) {
      ok = false;
      e = (e + div - 1) / div * div;
    }
  }
  if (!ok) {
    throw ShapeError("grid " + to_string(grid) + " is not divisible by " + std::to_string(div) +
                     "; pad to " + to_string(padded));
  }
}

Var forward(Var moving, Var fixed, std::span<const Var> weights, const BackboneConfig& config) {
  if (moving.shape() != fixed.shape()) {
    throw ShapeError("moving " + to_string(moving.shape()) + " and fixed " +
                     to_string(fixed.shape()) + " differ");
  }
  const Extents grid(moving.shape().begin() + 1, moving.shape().end());
  check_input_grid(config, grid);
  const auto plan = layer_plan(config);
  if (weights.size() != 2 * plan.size()) {
    throw ShapeError("weight set has " + std::to_string(weights.size()) + " tensors, backbone needs " +
                     std::to_string(2 * plan.size()));
  }

  Var input = concat_channels(moving, fixed);
  std::vector<Var> encoder_outputs;
  Var x = input;
  for (std::size_t l = 0; l < plan.size(); ++l) {
    const LayerSpec& layer = plan[l];
    x = upsample_nearest(x, layer.upsample);
    if (layer.skip >= 0) x = concat_channels(x, encoder_outputs.at(static_cast<std::size_t>(layer.skip)));
    if (layer.skip == LayerSpec::kInputSkip) x = concat_channels(x, input);
    x = conv(x, weights[2 * l], weights[2 * l + 1], layer.stride, Padding::Same);
    if (layer.activation) x = leaky_relu(x, config.leaky_slope);
    if (layer.stride == 2) encoder_outputs.push_back(x);
  }
  return x;
}

VectorField forward(const Volume& moving, const Volume& fixed, const WeightSet& weights) {
  Tape tape;
  std::vector<Var> w;
  w.reserve(weights.tensors.size());
  for (const auto& t : weights.tensors) w.push_back(tape.constant(t));
  return VectorField(forward(tape.constant(moving.tensor()), tape.constant(fixed.tensor()), w,
                             weights.config)
                         .value());
}

}  // namespace sgldreg
