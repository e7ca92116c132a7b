#include "sgldreg/losses.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "sgldreg/diffeo.hpp"
#include "sgldreg/error.hpp"
#include "sgldreg/ops.hpp"

namespace sgldreg {

void LossConfig::validate() const {
  if (lcc_window == 0 || lcc_window % 2 == 0) throw ConfigError("lcc_window must be odd and positive");
  if (!(lambda_smooth >= 0.0)) throw ConfigError("lambda_smooth must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(epsilon_var > 0.0)) throw ConfigError("epsilon_var must be positive");
}

namespace {

// Squared correlation per voxel from the five window sums. `count` holds the
// number of in-grid voxels of each window.
Var ncc_map(Var s_a, Var s_b, Var s_aa, Var s_bb, Var s_ab, const Tensor& count, double eps) {
  const Tensor& sa = s_a.value();
  const Tensor& sb = s_b.value();
  const Tensor& saa = s_aa.value();
  const Tensor& sbb = s_bb.value();
  const Tensor& sab = s_ab.value();
  Tensor out(sa.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double n = count[i];
    const double cross = sab[i] - sa[i] * sb[i] / n;
    const double var_a = saa[i] - sa[i] * sa[i] / n;
    const double var_b = sbb[i] - sb[i] * sb[i] / n;
    out[i] = cross * cross / (var_a * var_b + eps);
  }
  const std::size_t ia = s_a.id(), ib = s_b.id(), iaa = s_aa.id(), ibb = s_bb.id(), iab = s_ab.id();
  return s_a.tape().record(
      std::move(out), {s_a, s_b, s_aa, s_bb, s_ab},
      [ia, ib, iaa, ibb, iab, count, eps](Tape& t, std::size_t, const Tensor& g) {
        const Tensor& sa = t.value(ia);
        const Tensor& sb = t.value(ib);
        const Tensor& saa = t.value(iaa);
        const Tensor& sbb = t.value(ibb);
        const Tensor& sab = t.value(iab);
        Tensor* ga = t.grad_buffer(ia);
        Tensor* gb = t.grad_buffer(ib);
        Tensor* gaa = t.grad_buffer(iaa);
        Tensor* gbb = t.grad_buffer(ibb);
        Tensor* gab = t.grad_buffer(iab);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double n = count[i];
          const double cross = sab[i] - sa[i] * sb[i] / n;
          const double var_a = saa[i] - sa[i] * sa[i] / n;
          const double var_b = sbb[i] - sb[i] * sb[i] / n;
          const double den = var_a * var_b + eps;
          const double d_cross = g[i] * 2.0 * cross / den;
          const double d_var_a = -g[i] * cross * cross * var_b / (den * den);
          const double d_var_b = -g[i] * cross * cross * var_a / (den * den);
          if (gab) (*gab)[i] += d_cross;
          if (gaa) (*gaa)[i] += d_var_a;
          if (gbb) (*gbb)[i] += d_var_b;
          if (ga) (*ga)[i] += -d_cross * sb[i] / n - d_var_a * 2.0 * sa[i] / n;
          if (gb) (*gb)[i] += -d_cross * sa[i] / n - d_var_b * 2.0 * sb[i] / n;
        }
      });
}

}  // namespace

Var lcc(Var a, Var b, std::size_t window, double epsilon_var) {
  if (a.shape() != b.shape()) {
    throw ShapeError("lcc: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  // Windows are truncated at the border rather than zero-filled, so the
  // statistics stay invariant to local affine intensity changes there too.
  const Tensor count = box_sum(a.tape().constant(Tensor(a.shape(), 1.0)), window).value();
  Var s_a = box_sum(a, window);
  Var s_b = box_sum(b, window);
  Var s_aa = box_sum(mul(a, a), window);
  Var s_bb = box_sum(mul(b, b), window);
  Var s_ab = box_sum(mul(a, b), window);
  return mean(ncc_map(s_a, s_b, s_aa, s_bb, s_ab, count, epsilon_var));
}

double lcc(const Volume& a, const Volume& b, std::size_t window, double epsilon_var) {
  Tape tape;
  return lcc(tape.constant(a.tensor()), tape.constant(b.tensor()), window, epsilon_var).value().item();
}

Var smoothness(Var field) {
  const Tensor& f = field.value();
  const Grid3 g = canonical_grid(f.shape(), 1);
  const std::size_t channels = f.extent(0);
  const std::size_t plane = g.count();

  // Per canonical axis: neighbour stride and the weight 1 / (axes * channels * pairs).
  std::vector<std::size_t> axes;
  std::vector<std::size_t> strides;
  std::vector<double> weights;
  for (std::size_t d = 0; d < g.spatial_rank; ++d) {
    const std::size_t a = g.canonical_axis(d);
    if (g.n[a] < 2) continue;
    std::size_t stride = 1;
    for (std::size_t b = a + 1; b < 3; ++b) stride *= g.n[b];
    const double pairs = static_cast<double>(plane / g.n[a] * (g.n[a] - 1));
    axes.push_back(a);
    strides.push_back(stride);
    weights.push_back(1.0 / (static_cast<double>(g.spatial_rank) * channels * pairs));
  }

  auto for_each_pair = [g, channels, plane, axes, strides](auto&& visit) {
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const std::size_t a = axes[k];
      const std::size_t stride = strides[k];
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t z = 0; z < g.n[0]; ++z)
          for (std::size_t y = 0; y < g.n[1]; ++y)
            for (std::size_t x = 0; x < g.n[2]; ++x) {
              const std::array<std::size_t, 3> pos{z, y, x};
              if (pos[a] + 1 >= g.n[a]) continue;
              const std::size_t i = c * plane + (z * g.n[1] + y) * g.n[2] + x;
              visit(k, i, i + stride);
            }
      }
    }
  };

  double total = 0.0;
  for_each_pair([&](std::size_t k, std::size_t i, std::size_t j) {
    const double diff = f[j] - f[i];
    total += weights[k] * diff * diff;
  });

  const std::size_t id = field.id();
  return field.tape().record(Tensor::scalar(total), {field},
                             [id, weights, for_each_pair](Tape& t, std::size_t, const Tensor& g) {
                               Tensor* gf = t.grad_buffer(id);
                               if (!gf) return;
                               const Tensor& f = t.value(id);
                               for_each_pair([&](std::size_t k, std::size_t i, std::size_t j) {
                                 const double d = 2.0 * g[0] * weights[k] * (f[j] - f[i]);
                                 (*gf)[j] += d;
                                 (*gf)[i] -= d;
                               });
                             });
}

double smoothness(const Tensor& field) {
  Tape tape;
  return smoothness(tape.constant(field)).value().item();
}

LossTerms total_loss(Var moving, Var fixed, Var velocity, std::span<const Var> weights,
                     const LossConfig& cfg, std::size_t integration_steps) {
  Tape& tape = velocity.tape();
  Var displacement = integrate(velocity, integration_steps);
  Var warped = warp(moving, displacement);
  LossTerms terms;
  terms.similarity = scale(lcc(fixed, warped, cfg.lcc_window, cfg.epsilon_var), -1.0);
  terms.regularization =
      smoothness(cfg.regularize == RegularizedField::Velocity ? velocity : displacement);
  Var total = add(terms.similarity, scale(terms.regularization, cfg.lambda_smooth));
  if (!weights.empty()) {
    Var decay = sum_squares(weights.front());
    for (std::size_t i = 1; i < weights.size(); ++i) decay = add(decay, sum_squares(weights[i]));
    terms.decay = decay;
    total = add(total, scale(decay, cfg.weight_decay));
  } else {
    terms.decay = tape.constant(Tensor::scalar(0.0));
  }
  terms.total = total;
  return terms;
}

double total_loss(const Volume& moving, const Volume& fixed, const VectorField& velocity,
                  std::span<const Tensor> weights, const LossConfig& cfg,
                  std::size_t integration_steps) {
  Tape tape;
  std::vector<Var> w;
  w.reserve(weights.size());
  for (const Tensor& t : weights) w.push_back(tape.constant(t));
  return total_loss(tape.constant(moving.tensor()), tape.constant(fixed.tensor()),
                    tape.constant(velocity.tensor()), w, cfg, integration_steps)
      .total.value()
      .item();
}

}  // namespace sgldreg
