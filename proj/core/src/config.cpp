#include "sgldreg/config.hpp"

#include <fstream>
#include <optional>
#include <type_traits>
#include <map>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "io_util.hpp"
#include "sgldreg/error.hpp"

namespace sgldreg {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"seed"}},
      {"data", {"manifest", "output_dir"}},
      {"backbone",
       {"spatial_dims", "encoder_channels", "decoder_channels", "leaky_slope", "kernel_size", "head_init_std"}},
      {"loss", {"lcc_window", "lambda_smooth", "weight_decay", "epsilon_var", "regularize"}},
      {"optimizer", {"learning_rate", "beta1", "beta2", "epsilon"}},
      {"noise", {"kind", "std", "gamma", "scale", "offset", "parameterization"}},
      {"training", {"iterations", "burn_in", "validation_interval", "max_validation_pairs", "checkpoint_precision"}},
      {"integration", {"steps"}},
      {"posterior", {"weighting", "entropy", "floor", "identity_threshold"}},
  };
  return keys;
}

template <typename T>
void read(const pt::ptree& tree, const std::string& key, T& target) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return;
  const auto value = node->get_value_optional<T>();
  if (!value) throw ConfigError("invalid value '" + node->data() + "' for " + key);
  if constexpr (std::is_unsigned_v<T>) {
    if (detail::trim(node->data()).starts_with("-")) throw ConfigError(key + " must be non-negative");
  }
  target = *value;
}

std::optional<std::string> read_string(const pt::ptree& tree, const std::string& key) {
  const auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'));
  if (!v) return std::nullopt;
  return detail::trim(*v);
}

}  // namespace

void RunConfig::validate() const {
  training.validate();
  if (!(uncertainty.floor > 0.0)) throw ConfigError("posterior.floor must be positive");
  if (!(identity_threshold > 0.0)) throw ConfigError("posterior.identity_threshold must be positive");
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, _] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }

  RunConfig c;
  TrainingConfig& t = c.training;
  read(tree, "run.seed", t.seed);

  if (auto m = read_string(tree, "data.manifest")) c.manifest = *m;
  if (auto o = read_string(tree, "data.output_dir")) c.output_dir = *o;
  if (!c.manifest.empty() && c.manifest.is_relative()) c.manifest = (base_dir / c.manifest).lexically_normal();
  if (c.output_dir.is_relative()) c.output_dir = (base_dir / c.output_dir).lexically_normal();

  read(tree, "backbone.spatial_dims", t.backbone.spatial_dims);
  if (auto s = read_string(tree, "backbone.encoder_channels")) t.backbone.encoder_channels = detail::parse_size_list(*s);
  if (auto s = read_string(tree, "backbone.decoder_channels")) t.backbone.decoder_channels = detail::parse_size_list(*s);
  read(tree, "backbone.leaky_slope", t.backbone.leaky_slope);
  read(tree, "backbone.kernel_size", t.backbone.kernel_size);
  read(tree, "backbone.head_init_std", t.backbone.head_init_std);

  read(tree, "loss.lcc_window", t.loss.lcc_window);
  read(tree, "loss.lambda_smooth", t.loss.lambda_smooth);
  read(tree, "loss.weight_decay", t.loss.weight_decay);
  read(tree, "loss.epsilon_var", t.loss.epsilon_var);
  if (auto s = read_string(tree, "loss.regularize")) {
    if (*s == "velocity") {
      t.loss.regularize = RegularizedField::Velocity;
    } else if (*s == "deformation") {
      t.loss.regularize = RegularizedField::Deformation;
    } else {
      throw ConfigError("loss.regularize must be velocity or deformation, got '" + *s + "'");
    }
  }

  read(tree, "optimizer.learning_rate", t.adam.learning_rate);
  read(tree, "optimizer.beta1", t.adam.beta1);
  read(tree, "optimizer.beta2", t.adam.beta2);
  read(tree, "optimizer.epsilon", t.adam.epsilon);

  t.noise.kind = NoiseKind::Fixed;
  if (auto s = read_string(tree, "noise.kind")) t.noise.kind = parse_noise_kind(*s);
  t.noise.target_std = t.adam.learning_rate / 50.0;
  t.noise.scale = t.adam.learning_rate;
  read(tree, "noise.std", t.noise.target_std);
  read(tree, "noise.gamma", t.noise.gamma);
  read(tree, "noise.scale", t.noise.scale);
  read(tree, "noise.offset", t.noise.offset);
  if (auto s = read_string(tree, "noise.parameterization")) {
    if (*s == "std") {
      t.noise.parameterization = NoiseParameterization::StdDev;
    } else if (*s == "variance") {
      t.noise.parameterization = NoiseParameterization::Variance;
    } else {
      throw ConfigError("noise.parameterization must be std or variance, got '" + *s + "'");
    }
  }

  read(tree, "training.iterations", t.iterations);
  if (tree.get_child_optional(pt::ptree::path_type("training.burn_in", '.'))) {
    std::size_t b = 0;
    read(tree, "training.burn_in", b);
    t.burn_in = b;
  }
  read(tree, "training.validation_interval", t.validation_interval);
  read(tree, "training.max_validation_pairs", t.max_validation_pairs);
  if (auto s = read_string(tree, "training.checkpoint_precision")) {
    if (*s == "32") {
      c.checkpoint_precision = Precision::Float32;
    } else if (*s == "64") {
      c.checkpoint_precision = Precision::Float64;
    } else {
      throw ConfigError("training.checkpoint_precision must be 32 or 64");
    }
  }

  read(tree, "integration.steps", t.integration.steps);

  if (auto s = read_string(tree, "posterior.weighting")) t.weighting = parse_snapshot_weighting(*s);
  if (auto s = read_string(tree, "posterior.entropy")) {
    if (*s == "printed") {
      c.uncertainty.form = EntropyForm::AsPrinted;
    } else if (*s == "gaussian") {
      c.uncertainty.form = EntropyForm::Gaussian;
    } else {
      throw ConfigError("posterior.entropy must be printed or gaussian, got '" + *s + "'");
    }
  }
  read(tree, "posterior.floor", c.uncertainty.floor);
  read(tree, "posterior.identity_threshold", c.identity_threshold);

  c.validate();
  if (!c.manifest.empty() && !std::filesystem::exists(c.manifest)) {
    throw ConfigError("data.manifest '" + c.manifest.string() + "' does not exist");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  try {
    return parse_run_config(in, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace sgldreg
