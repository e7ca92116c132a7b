#include "sgldreg/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "sgldreg/diffeo.hpp"
#include "sgldreg/error.hpp"
#include "sgldreg/metrics.hpp"

namespace sgldreg {

std::string to_string(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::Blobs: return "blobs";
    case ShapeFamily::Rings: return "rings";
    case ShapeFamily::Phantom: return "phantom";
  }
  return "?";
}

ShapeFamily parse_shape_family(const std::string& text) {
  if (text == "blobs") return ShapeFamily::Blobs;
  if (text == "rings") return ShapeFamily::Rings;
  if (text == "phantom") return ShapeFamily::Phantom;
  throw ConfigError("unknown shape family '" + text + "' (blobs|rings|phantom)");
}

void SyntheticSpec::validate() const {
  if (grid.empty() || grid.size() > 3) throw ConfigError("synthetic grid must have 1 to 3 axes");
  for (auto n : grid) {
    if (n < 8) throw ConfigError("synthetic grid extents must be at least 8");
  }
  if (labels == 0) throw ConfigError("synthetic spec needs at least one label");
  if (!(max_displacement >= 0.0)) throw ConfigError("max_displacement must be non-negative");
  if (!(smoothness > 0.0)) throw ConfigError("smoothness must be positive");
  if (!(edge_blur >= 0.0) || !(texture >= 0.0)) throw ConfigError("edge_blur and texture must be non-negative");
}

Tensor gaussian_smooth(const Tensor& data, double sigma) {
  if (!(sigma > 0.0)) return data;
  const Grid3 g = canonical_grid(data.shape(), 1);
  const std::size_t plane = g.count();
  const std::size_t channels = data.extent(0);
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k) kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& k : kernel) k /= norm;

  Tensor cur = data;
  Tensor next(data.shape());
  const std::array<std::size_t, 3> stride{g.n[1] * g.n[2], g.n[2], 1};
  for (std::size_t a = 0; a < 3; ++a) {
    const long n = static_cast<long>(g.n[a]);
    if (n == 1) continue;
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = cur.data() + c * plane;
      double* dst = next.data() + c * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const long pos = static_cast<long>((p / stride[a]) % g.n[a]);
        const std::size_t base = p - static_cast<std::size_t>(pos) * stride[a];
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const long q = std::clamp(pos + k, 0L, n - 1);
          acc += kernel[k + radius] * src[base + static_cast<std::size_t>(q) * stride[a]];
        }
        dst[p] = acc;
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

namespace {

struct Ellipsoid {
  std::array<double, 3> center{};
  std::array<double, 3> radius{1, 1, 1};

  bool contains(const std::array<double, 3>& p, std::size_t dims) const {
    double s = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double t = (p[d] - center[d]) / radius[d];
      s += t * t;
    }
    return s <= 1.0;
  }
};

// Voxel coordinates of every voxel, in real-axis order.
std::vector<std::array<double, 3>> coordinates(const Extents& grid) {
  const std::size_t dims = grid.size();
  std::vector<std::array<double, 3>> out(element_count(grid));
  std::array<std::size_t, 3> idx{};
  for (auto& p : out) {
    for (std::size_t d = 0; d < dims; ++d) p[d] = static_cast<double>(idx[d]);
    for (std::size_t d = dims; d-- > 0;) {
      if (++idx[d] < grid[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

// Piecewise-constant intensity image and a per-voxel label (0 = none).
struct LabelImage {
  std::vector<double> intensity;
  std::vector<std::size_t> label;
};

std::vector<double> label_levels(std::size_t labels, std::mt19937_64& rng) {
  std::vector<double> levels(labels);
  for (std::size_t k = 0; k < labels; ++k) {
    levels[k] = 0.5 + 0.5 * static_cast<double>(k + 1) / static_cast<double>(labels);
  }
  std::shuffle(levels.begin(), levels.end(), rng);
  return levels;
}

LabelImage draw_shapes(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const std::size_t dims = spec.grid.size();
  const auto pts = coordinates(spec.grid);
  LabelImage img{std::vector<double>(pts.size(), 0.0), std::vector<std::size_t>(pts.size(), 0)};
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto jitter = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const auto levels = label_levels(spec.labels, rng);

  Ellipsoid body;
  for (std::size_t d = 0; d < dims; ++d) {
    const double n = static_cast<double>(spec.grid[d]);
    body.center[d] = 0.5 * (n - 1) + jitter(-0.03, 0.03) * n;
    body.radius[d] = jitter(0.36, 0.43) * n;
  }

  std::vector<Ellipsoid> parts(spec.labels);
  switch (spec.family) {
    case ShapeFamily::Blobs:
      // Rejection sampling keeps blobs apart so no label is reduced to a
      // sliver by a later one; after many failed draws overlap is allowed.
      for (std::size_t k = 0; k < parts.size(); ++k) {
        for (int attempt = 0;; ++attempt) {
          Ellipsoid& e = parts[k];
          for (std::size_t d = 0; d < dims; ++d) {
            const double n = static_cast<double>(spec.grid[d]);
            e.center[d] = jitter(0.25, 0.75) * (n - 1);
            e.radius[d] = jitter(0.09, 0.14) * n;
          }
          bool clear = true;
          for (std::size_t j = 0; j < k && clear; ++j) {
            double dist = 0.0, reach = 0.0;
            for (std::size_t d = 0; d < dims; ++d) {
              dist += (e.center[d] - parts[j].center[d]) * (e.center[d] - parts[j].center[d]);
              reach = std::max(reach, e.radius[d]);
            }
            double other = 0.0;
            for (std::size_t d = 0; d < dims; ++d) other = std::max(other, parts[j].radius[d]);
            clear = std::sqrt(dist) >= reach + other + 2.0;
          }
          if (clear || attempt >= 200) break;
        }
      }
      break;
    case ShapeFamily::Rings:
      // Nested shells around a common centre; label k is the shell between
      // ellipsoid k and k+1, so parts[] shrink with k.
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const double frac = 1.0 - static_cast<double>(k) / static_cast<double>(parts.size() + 1);
        for (std::size_t d = 0; d < dims; ++d) {
          parts[k].center[d] = body.center[d];
          parts[k].radius[d] = body.radius[d] * 0.85 * frac;
        }
      }
      break;
    case ShapeFamily::Phantom: {
      // Loose head-phantom layout: a ventricle pair and smaller lesions,
      // placed on fixed offsets around the body centre with jitter.
      static constexpr std::array<std::array<double, 4>, 6> layout{{
          {-0.10, -0.12, 0.10, 0.22},
          {-0.10, 0.12, 0.10, 0.22},
          {0.22, 0.00, 0.12, 0.12},
          {-0.28, 0.00, 0.07, 0.10},
          {0.08, -0.22, 0.06, 0.06},
          {0.08, 0.22, 0.06, 0.06},
      }};
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& row = layout[k % layout.size()];
        for (std::size_t d = 0; d < dims; ++d) {
          const double n = static_cast<double>(spec.grid[d]);
          const double off = d < 2 ? row[d] : 0.0;
          const double rad = d < 2 ? row[2 + d] : 0.12;
          parts[k].center[d] = body.center[d] + (off + jitter(-0.03, 0.03)) * n;
          parts[k].radius[d] = (rad + jitter(-0.02, 0.02)) * n;
        }
      }
      break;
    }
  }

  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (body.contains(pts[i], dims)) img.intensity[i] = 0.25;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (parts[k].contains(pts[i], dims)) {
        img.intensity[i] = levels[k];
        img.label[i] = k + 1;
      }
    }
  }
  return img;
}

Tensor white_noise(const Extents& shape, std::mt19937_64& rng) {
  Tensor t(shape);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (double& v : t.values()) v = n01(rng);
  return t;
}

}  // namespace

SyntheticPair generate_pair(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t dims = spec.grid.size();
  Extents image_shape{1};
  image_shape.insert(image_shape.end(), spec.grid.begin(), spec.grid.end());
  Extents field_shape = image_shape;
  field_shape[0] = dims;

  const LabelImage shapes = draw_shapes(spec, rng);
  Tensor image(image_shape, shapes.intensity);
  if (spec.texture > 0.0) {
    Tensor tex = gaussian_smooth(white_noise(image_shape, rng), 2.0);
    double peak = 0.0;
    for (double v : tex.values()) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < image.size(); ++i) {
      if (image[i] > 0.0 && peak > 0.0) image[i] += spec.texture * tex[i] / peak;
    }
  }
  image = gaussian_smooth(image, spec.edge_blur);
  for (double& v : image.values()) v = std::clamp(v, 0.0, 1.0);

  SyntheticPair pair;
  pair.moving = Volume(std::move(image));
  for (std::size_t k = 1; k <= spec.labels; ++k) {
    LabelMask m(spec.grid);
    for (std::size_t i = 0; i < m.voxel_count(); ++i) m[i] = shapes.label[i] == k ? 1.0 : 0.0;
    pair.moving_masks.push_back(std::move(m));
  }

  // Noise is smoothed on a padded grid and cropped so the field statistics
  // do not change near the border.
  const auto pad = static_cast<std::size_t>(std::ceil(3.0 * spec.smoothness));
  Extents padded_shape = field_shape;
  for (std::size_t d = 1; d < padded_shape.size(); ++d) padded_shape[d] += 2 * pad;
  const Tensor padded = gaussian_smooth(white_noise(padded_shape, rng), spec.smoothness);
  Tensor velocity(field_shape);
  {
    const Grid3 pg = canonical_grid(padded_shape, 1);
    const Grid3 g = canonical_grid(field_shape, 1);
    std::array<std::size_t, 3> off{};
    for (std::size_t d = 0; d < dims; ++d) off[g.canonical_axis(d)] = pad;
    std::size_t i = 0;
    for (std::size_t c = 0; c < dims; ++c) {
      for (std::size_t z = 0; z < g.n[0]; ++z) {
        for (std::size_t y = 0; y < g.n[1]; ++y) {
          for (std::size_t x = 0; x < g.n[2]; ++x) {
            velocity[i++] =
                padded[((c * pg.n[0] + z + off[0]) * pg.n[1] + y + off[1]) * pg.n[2] + x + off[2]];
          }
        }
      }
    }
  }
  const std::size_t voxels = element_count(spec.grid);
  double peak = 0.0;
  for (std::size_t p = 0; p < voxels; ++p) {
    double s = 0.0;
    for (std::size_t d = 0; d < dims; ++d) s += velocity[d * voxels + p] * velocity[d * voxels + p];
    peak = std::max(peak, std::sqrt(s));
  }
  double magnitude = spec.max_displacement;
  for (int attempt = 0; attempt < 10; ++attempt, magnitude *= 0.5) {
    VectorField v(velocity);
    for (double& x : v.tensor().values()) x *= peak > 0.0 ? magnitude / peak : 0.0;
    VectorField phi = integrate(v, 6);
    if (fold_percentage(phi) > 0.0) continue;
    pair.fixed = warp(pair.moving, phi);
    for (const auto& m : pair.moving_masks) pair.fixed_masks.push_back(warp_mask(m, phi));
    pair.ground_truth = std::move(phi);
    return pair;
  }
  throw NumericError("generate_pair: ground-truth deformation still folds after 10 attempts");
}

}  // namespace sgldreg
