#include "sgldreg/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "sgldreg/diffeo.hpp"
#include "sgldreg/error.hpp"

namespace sgldreg {

double dice(const LabelMask& a, const LabelMask& b) {
  if (a.tensor().shape() != b.tensor().shape()) {
    throw ShapeError("dice: mask shapes differ " + to_string(a.tensor().shape()) + " vs " +
                     to_string(b.tensor().shape()));
  }
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.voxel_count(); ++i) {
    const bool in_a = a[i] > 0.5;
    const bool in_b = b[i] > 0.5;
    na += in_a;
    nb += in_b;
    both += in_a && in_b;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

LabelMask warp_mask(const LabelMask& mask, const VectorField& deformation) {
  Volume out = warp(mask, deformation);
  for (double& v : out.tensor().values()) v = v >= 0.5 ? 1.0 : 0.0;
  return out;
}

Volume jacobian_determinant(const VectorField& deformation) {
  const Tensor& u = deformation.tensor();
  const Grid3 g = canonical_grid(u.shape(), 1);
  const std::size_t dims = g.spatial_rank;
  const std::size_t plane = g.count();
  Volume out(deformation.grid());

  std::array<std::size_t, 3> strides{g.n[1] * g.n[2], g.n[2], 1};
  for (std::size_t z = 0; z < g.n[0]; ++z) {
    for (std::size_t y = 0; y < g.n[1]; ++y) {
      for (std::size_t x = 0; x < g.n[2]; ++x) {
        const std::array<std::size_t, 3> pos{z, y, x};
        const std::size_t p = (z * g.n[1] + y) * g.n[2] + x;
        // J[i][j] = delta_ij + d u_i / d x_j over real axes.
        std::array<std::array<double, 3>, 3> J{};
        for (std::size_t j = 0; j < dims; ++j) {
          const std::size_t a = g.canonical_axis(j);
          const std::size_t n = g.n[a];
          for (std::size_t i = 0; i < dims; ++i) {
            double d = 0.0;
            if (n > 1) {
              const double* ui = u.data() + i * plane;
              d = pos[a] + 1 < n ? ui[p + strides[a]] - ui[p] : ui[p] - ui[p - strides[a]];
            }
            J[i][j] = d + (i == j ? 1.0 : 0.0);
          }
        }
        double det = 0.0;
        if (dims == 1) {
          det = J[0][0];
        } else if (dims == 2) {
          det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        } else {
          det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
        }
        out[p] = det;
      }
    }
  }
  return out;
}

double fold_percentage(const VectorField& deformation) {
  const Volume det = jacobian_determinant(deformation);
  std::size_t folds = 0;
  for (double v : det.tensor().values()) folds += v < 0.0;
  return 100.0 * static_cast<double>(folds) / static_cast<double>(det.voxel_count());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: series lengths differ");
  if (x.size() < 2) throw std::invalid_argument("pearson: needs at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: constant series");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace sgldreg
