#include "sgldreg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "io_util.hpp"
#include "sgldreg/error.hpp"
#include "sgldreg/volume_io.hpp"

namespace sgldreg {

Volume corrupt_gaussian(const Volume& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("corrupt_gaussian: sigma must be non-negative");
  if (sigma == 0.0) return image;
  Volume out = image;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.tensor().values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

Volume corrupt_mixed(const Volume& image_i, const Volume& image_j, double alpha) {
  if (image_i.tensor().shape() != image_j.tensor().shape()) {
    throw ShapeError("corrupt_mixed: shapes differ " + to_string(image_i.tensor().shape()) + " vs " +
                     to_string(image_j.tensor().shape()));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("corrupt_mixed: alpha must lie in [0, 1]");
  Volume out = image_i;
  for (std::size_t i = 0; i < out.voxel_count(); ++i) {
    out[i] = alpha * image_j[i] + (1.0 - alpha) * image_i[i];
  }
  return out;
}

PreprocessResult preprocess(const Volume& volume, const Extents& target) {
  const Extents src = volume.grid();
  if (target.size() != src.size()) {
    throw ShapeError("preprocess: target " + to_string(target) + " has a different rank than " + to_string(src));
  }
  const std::size_t dims = src.size();
  Volume out(target);
  // Source index = target index + offset; negative offsets pad.
  std::vector<long> offset(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    offset[d] = (static_cast<long>(src[d]) - static_cast<long>(target[d])) / 2;
  }
  std::vector<std::size_t> idx(dims, 0), sidx(dims);
  for (std::size_t i = 0; i < out.voxel_count(); ++i) {
    bool inside = true;
    for (std::size_t d = 0; d < dims; ++d) {
      const long s = static_cast<long>(idx[d]) + offset[d];
      if (s < 0 || s >= static_cast<long>(src[d])) {
        inside = false;
        break;
      }
      sidx[d] = static_cast<std::size_t>(s);
    }
    out[i] = inside ? volume[linear_index(src, sidx)] : 0.0;
    for (std::size_t d = dims; d-- > 0;) {
      if (++idx[d] < target[d]) break;
      idx[d] = 0;
    }
  }
  const auto vals = out.tensor().values();
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  const double min = *lo, range = *hi - *lo;
  PreprocessResult result;
  if (!(range > 0.0)) {
    out.tensor().fill(0.0);
    result.degenerate = true;
  } else {
    for (double& v : out.tensor().values()) v = (v - min) / range;
  }
  result.volume = std::move(out);
  return result;
}

Split split_indices(std::size_t n, std::uint64_t seed, double train_fraction, double validation_fraction) {
  if (!(train_fraction >= 0.0 && validation_fraction >= 0.0 && train_fraction + validation_fraction <= 1.0)) {
    throw ConfigError("split fractions must be non-negative and sum to at most 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const double test_fraction = 1.0 - train_fraction - validation_fraction;
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  const auto n_test =
      std::min(n - n_val, static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n))));
  Split s;
  s.train.assign(order.begin(), order.end() - static_cast<long>(n_val + n_test));
  s.validation.assign(order.end() - static_cast<long>(n_val + n_test), order.end() - static_cast<long>(n_test));
  s.test.assign(order.end() - static_cast<long>(n_test), order.end());
  return s;
}

std::vector<DatasetEntry> DatasetManifest::in_split(const std::string& split) const {
  std::vector<DatasetEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const DatasetEntry& e) { return e.split == split; });
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest '" + path.string() + "'");
  DatasetManifest m;
  m.base = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss(line);
    std::string kind, mv, fx, ml, fl;
    DatasetEntry e;
    ss >> kind >> e.id >> e.split >> mv >> fx >> ml >> fl;
    std::string extra;
    if (kind != "pair" || fl.empty() || (ss >> extra)) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'pair <id> <split> <moving> <fixed> <moving_labels> <fixed_labels>'");
    }
    if (e.split != "train" && e.split != "validation" && e.split != "test") {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": unknown split '" + e.split + "'");
    }
    e.moving = mv;
    e.fixed = fx;
    e.moving_labels = ml == "-" ? std::filesystem::path{} : std::filesystem::path{ml};
    e.fixed_labels = fl == "-" ? std::filesystem::path{} : std::filesystem::path{fl};
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw ConfigError("manifest '" + path.string() + "' lists no pairs");
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest '" + path.string() + "'");
  auto name = [](const std::filesystem::path& p) { return p.empty() ? std::string("-") : p.generic_string(); };
  out << "# sgldreg dataset manifest\n";
  for (const auto& e : manifest.entries) {
    out << "pair " << e.id << ' ' << e.split << ' ' << name(e.moving) << ' ' << name(e.fixed) << ' '
        << name(e.moving_labels) << ' ' << name(e.fixed_labels) << '\n';
  }
}

Tensor stack_masks(const std::vector<LabelMask>& masks) {
  if (masks.empty()) throw ShapeError("stack_masks: no masks");
  const Extents grid = masks.front().grid();
  Extents shape{masks.size()};
  shape.insert(shape.end(), grid.begin(), grid.end());
  Tensor t(shape);
  const std::size_t n = masks.front().voxel_count();
  for (std::size_t k = 0; k < masks.size(); ++k) {
    if (masks[k].grid() != grid) throw ShapeError("stack_masks: masks differ in shape");
    std::copy_n(masks[k].tensor().data(), n, t.data() + k * n);
  }
  return t;
}

std::vector<LabelMask> unstack_masks(const Tensor& stacked) {
  Extents grid(stacked.shape().begin() + 1, stacked.shape().end());
  std::vector<LabelMask> out;
  const std::size_t n = element_count(grid);
  for (std::size_t k = 0; k < stacked.extent(0); ++k) {
    LabelMask m(grid);
    std::copy_n(stacked.data() + k * n, n, m.tensor().data());
    out.push_back(std::move(m));
  }
  return out;
}

LoadedPair load_pair(const DatasetManifest& manifest, const DatasetEntry& entry) {
  auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() ? p : manifest.base / p; };
  LoadedPair pair;
  pair.id = entry.id;
  pair.images.moving = load_volume(resolve(entry.moving));
  pair.images.fixed = load_volume(resolve(entry.fixed));
  if (pair.images.moving.grid() != pair.images.fixed.grid()) {
    throw ShapeError("pair " + entry.id + ": moving and fixed shapes differ");
  }
  if (!entry.moving_labels.empty()) pair.moving_masks = unstack_masks(load_field(resolve(entry.moving_labels)));
  if (!entry.fixed_labels.empty()) pair.fixed_masks = unstack_masks(load_field(resolve(entry.fixed_labels)));
  if (pair.moving_masks.size() != pair.fixed_masks.size()) {
    throw ShapeError("pair " + entry.id + ": moving and fixed label counts differ");
  }
  for (std::size_t k = 0; k < pair.moving_masks.size(); ++k) {
    if (pair.moving_masks[k].grid() != pair.images.moving.grid() ||
        pair.fixed_masks[k].grid() != pair.images.moving.grid()) {
      throw ShapeError("pair " + entry.id + ": label shape differs from image shape");
    }
  }
  return pair;
}

std::vector<LoadedPair> load_split(const DatasetManifest& manifest, const std::string& split) {
  std::vector<LoadedPair> out;
  for (const auto& e : manifest.in_split(split)) out.push_back(load_pair(manifest, e));
  return out;
}

std::vector<ImagePair> images_of(const std::vector<LoadedPair>& pairs) {
  std::vector<ImagePair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.images);
  return out;
}

DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir, std::size_t count,
                                        const SyntheticSpec& base, std::uint64_t split_seed) {
  std::filesystem::create_directories(dir);
  const Split split = split_indices(count, split_seed);
  std::vector<std::string> split_of(count);
  for (auto i : split.train) split_of[i] = "train";
  for (auto i : split.validation) split_of[i] = "validation";
  for (auto i : split.test) split_of[i] = "test";

  DatasetManifest m;
  m.base = dir;
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticSpec spec = base;
    spec.seed = base.seed + i;
    const SyntheticPair pair = generate_pair(spec);
    char id[32];
    std::snprintf(id, sizeof id, "pair%04zu", i);
    DatasetEntry e;
    e.id = id;
    e.split = split_of[i];
    e.moving = e.id + "_moving.vol";
    e.fixed = e.id + "_fixed.vol";
    e.moving_labels = e.id + "_moving_labels.vol";
    e.fixed_labels = e.id + "_fixed_labels.vol";
    save_volume(dir / e.moving, pair.moving);
    save_volume(dir / e.fixed, pair.fixed);
    save_field(dir / e.moving_labels, stack_masks(pair.moving_masks), Precision::Float32);
    save_field(dir / e.fixed_labels, stack_masks(pair.fixed_masks), Precision::Float32);
    m.entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.txt", m);
  return m;
}

}  // namespace sgldreg
