#include "sgldreg/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sgldreg/checkpoint.hpp"
#include "sgldreg/diffeo.hpp"
#include "sgldreg/error.hpp"

namespace sgldreg {

std::vector<double> snapshot_weights(std::span<const double> validation_losses, SnapshotWeighting weighting,
                                     double floor) {
  std::vector<double> w(validation_losses.size());
  if (weighting == SnapshotWeighting::NegativeLoss) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::max(-validation_losses[i], floor);
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (double l : validation_losses) best = std::max(best, -l);
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) total += w[i] = std::exp(-validation_losses[i] - best);
    for (double& v : w) v /= total;
  }
  return w;
}

std::vector<double> SnapshotStore::posterior_weights() const {
  std::vector<double> losses;
  for (const auto& s : snapshots) losses.push_back(s.validation_loss);
  return snapshot_weights(losses, weighting);
}

std::string to_string(SnapshotWeighting weighting) {
  return weighting == SnapshotWeighting::Softmax ? "softmax" : "negative_loss";
}

SnapshotWeighting parse_snapshot_weighting(const std::string& text) {
  if (text == "negative_loss") return SnapshotWeighting::NegativeLoss;
  if (text == "softmax") return SnapshotWeighting::Softmax;
  throw ConfigError("unknown snapshot weighting '" + text + "'");
}

void save_store(const std::filesystem::path& directory, const SnapshotStore& store) {
  std::filesystem::create_directories(directory);
  std::ofstream manifest(directory / "snapshots.txt", std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write store manifest in " + directory.string());
  manifest << "# sgldreg snapshot store\n";
  manifest << "integration_steps " << store.integration_steps << '\n';
  manifest << "weighting " << to_string(store.weighting) << '\n';
  char line[256];
  for (const auto& s : store.snapshots) {
    const std::string file = "snapshot_" + std::to_string(s.iteration) + ".ckpt";
    save_checkpoint(directory / file, s.weights);
    std::snprintf(line, sizeof line, "snapshot %zu %.17g %s\n", s.iteration, s.validation_loss, file.c_str());
    manifest << line;
  }
}

SnapshotStore load_store(const std::filesystem::path& directory) {
  std::ifstream manifest(directory / "snapshots.txt");
  if (!manifest) throw ConfigError("no snapshot manifest in " + directory.string());
  SnapshotStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    std::string key;
    in >> key;
    if (key == "integration_steps") {
      in >> store.integration_steps;
    } else if (key == "weighting") {
      std::string w;
      in >> w;
      store.weighting = parse_snapshot_weighting(w);
    } else if (key == "snapshot") {
      Snapshot s;
      std::string file;
      in >> s.iteration >> s.validation_loss >> file;
      if (!in) throw ConfigError("malformed snapshot line " + std::to_string(line_no));
      s.weights = load_checkpoint(directory / file);
      store.snapshots.push_back(std::move(s));
    } else {
      throw ConfigError("unknown store manifest key '" + key + "' on line " + std::to_string(line_no));
    }
    if (in.fail()) throw ConfigError("malformed store manifest line " + std::to_string(line_no));
  }
  if (store.snapshots.empty()) throw ConfigError("snapshot store " + directory.string() + " is empty");
  if (store.integration_steps < 1) throw ConfigError("store integration_steps must be >= 1");
  return store;
}

std::vector<VectorField> sample_velocities(const Volume& moving, const Volume& fixed,
                                           const SnapshotStore& store) {
  if (store.snapshots.empty()) throw ConfigError("snapshot store is empty");
  std::vector<VectorField> fields;
  fields.reserve(store.size());
  for (const auto& s : store.snapshots) fields.push_back(forward(moving, fixed, s.weights));
  return fields;
}

namespace {

std::vector<double> normalized(std::span<const VectorField> fields, std::span<const double> weights) {
  if (fields.empty()) throw std::invalid_argument("posterior: no fields");
  if (fields.size() != weights.size()) throw std::invalid_argument("posterior: fields and weights differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("posterior: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("posterior: weights sum to zero");
  for (const auto& f : fields) {
    if (f.tensor().shape() != fields.front().tensor().shape()) {
      throw ShapeError("posterior: fields have different shapes");
    }
  }
  std::vector<double> w(weights.begin(), weights.end());
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

VectorField weighted_mean(std::span<const VectorField> fields, std::span<const double> weights) {
  const auto w = normalized(fields, weights);
  Tensor out(fields.front().tensor().shape(), 0.0);
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const Tensor& f = fields[k].tensor();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[k] * f[i];
  }
  return VectorField(std::move(out));
}

VectorField variance(std::span<const VectorField> fields, std::span<const double> weights) {
  const auto w = normalized(fields, weights);
  const Tensor mu = weighted_mean(fields, weights).tensor();
  Tensor out(mu.shape(), 0.0);
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const Tensor& f = fields[k].tensor();
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = f[i] - mu[i];
      out[i] += w[k] * d * d;
    }
  }
  return VectorField(std::move(out));
}

VectorField uncertainty(const VectorField& var, const UncertaintyOptions& options) {
  const double factor = options.form == EntropyForm::Gaussian ? 2.0 * std::numbers::pi * std::numbers::e
                                                              : 2.0 * std::numbers::pi;
  Tensor out = var.tensor();
  for (double& v : out.values()) {
    if (v < 0.0) throw std::invalid_argument("uncertainty: variance must be non-negative");
    v = 0.5 * std::log(factor * std::max(v, options.floor));
  }
  return VectorField(std::move(out));
}

VectorField deformation_uncertainty(std::span<const VectorField> fields, std::span<const double> weights,
                                    std::size_t integration_steps, const UncertaintyOptions& options) {
  std::vector<VectorField> deformations;
  deformations.reserve(fields.size());
  for (const auto& v : fields) deformations.push_back(integrate(v, integration_steps));
  return uncertainty(variance(deformations, weights), options);
}

PosteriorSummary summarize(std::span<const VectorField> fields, std::span<const double> weights,
                           const UncertaintyOptions& options) {
  PosteriorSummary s;
  s.mean_velocity = weighted_mean(fields, weights);
  s.variance = variance(fields, weights);
  s.uncertainty = uncertainty(s.variance, options);
  return s;
}

RegistrationResult register_images(const Volume& moving, const Volume& fixed, const SnapshotStore& store,
                                   const UncertaintyOptions& options) {
  if (moving.tensor().shape() != fixed.tensor().shape()) {
    throw ShapeError("moving " + to_string(moving.tensor().shape()) + " and fixed " +
                     to_string(fixed.tensor().shape()) + " differ");
  }
  const auto fields = sample_velocities(moving, fixed, store);
  const auto weights = store.posterior_weights();
  RegistrationResult r;
  r.summary = summarize(fields, weights, options);
  r.deformation = integrate(r.summary.mean_velocity, store.integration_steps);
  r.registered = warp(moving, r.deformation);
  return r;
}

}  // namespace sgldreg
