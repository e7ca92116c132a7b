#include "sgldreg/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "sgldreg/error.hpp"

namespace sgldreg {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void accumulate(Tensor* dst, const Tensor& src, double factor = 1.0) {
  if (!dst) return;
  double* d = dst->data();
  const double* s = src.data();
  const std::size_t n = src.size();
  for (std::size_t i = 0; i < n; ++i) d[i] += factor * s[i];
}

// ---------------------------------------------------------------------------
// Convolution geometry

struct ConvGeometry {
  std::size_t cin = 0, cout = 0;
  Grid3 in, out;
  std::array<std::size_t, 3> k{1, 1, 1};
  std::array<std::size_t, 3> stride{1, 1, 1};
  std::array<long, 3> pad{0, 0, 0};
  std::size_t taps() const { return k[0] * k[1] * k[2]; }
};

ConvGeometry conv_geometry(const Extents& input, const Extents& kernel, const Extents& bias,
                           std::size_t stride, Padding padding) {
  if (stride == 0) throw ShapeError("conv: stride must be positive");
  if (input.size() < 2 || input.size() > 4) {
    throw ShapeError("conv: input must be [C, ...spatial] with 1-3 spatial axes, got " +
                     to_string(input));
  }
  if (kernel.size() != input.size() + 1) {
    throw ShapeError("conv: kernel rank must be input rank + 1, kernel " + to_string(kernel) +
                     " input " + to_string(input));
  }
  ConvGeometry g;
  g.cin = input[0];
  g.cout = kernel[0];
  if (kernel[1] != g.cin) {
    throw ShapeError("conv: kernel expects " + std::to_string(kernel[1]) +
                     " input channels, input has " + std::to_string(g.cin));
  }
  if (element_count(bias) != g.cout) {
    throw ShapeError("conv: bias must have " + std::to_string(g.cout) + " entries, got shape " +
                     to_string(bias));
  }
  g.in = canonical_grid(input, 1);
  g.out = g.in;
  for (std::size_t d = 0; d < g.in.spatial_rank; ++d) {
    const std::size_t a = g.in.canonical_axis(d);
    const std::size_t n = g.in.n[a];
    const std::size_t k = kernel[2 + d];
    g.k[a] = k;
    g.stride[a] = stride;
    if (padding == Padding::Valid) {
      if (n < k) {
        throw ShapeError("conv: valid padding needs extent >= kernel, input " + to_string(input) +
                         " kernel " + to_string(kernel));
      }
      g.out.n[a] = (n - k) / stride + 1;
      g.pad[a] = 0;
    } else {
      const std::size_t o = (n + stride - 1) / stride;
      const long total = std::max<long>(static_cast<long>((o - 1) * stride + k) - static_cast<long>(n), 0);
      g.out.n[a] = o;
      g.pad[a] = total / 2;
    }
  }
  return g;
}

// Output indices o in [lo, hi) whose input index o*s - p + k falls inside [0, n).
struct Span {
  long lo, hi;
};

Span valid_outputs(std::size_t out_n, std::size_t n, std::size_t s, long p, std::size_t k) {
  const long sl = static_cast<long>(s);
  const long off = p - static_cast<long>(k);  // i = o*s - off
  long lo = off <= 0 ? 0 : (off + sl - 1) / sl;
  long hi_num = static_cast<long>(n) - 1 + off;
  long hi = hi_num < 0 ? 0 : hi_num / sl + 1;
  hi = std::min<long>(hi, static_cast<long>(out_n));
  lo = std::min(lo, hi);
  return {lo, hi};
}

enum class ConvPass { Forward, InputGrad, WeightGrad };

// Shared loop nest for the three convolution passes.
//   Forward:    out[co, o] += w * in[ci, i(o)]
//   InputGrad:  gin[ci, i(o)] += w * gout[co, o]
//   WeightGrad: gw[co, ci, k] += gout[co, o] * in[ci, i(o)]
template <ConvPass pass>
void conv_loops(const ConvGeometry& g, const double* in, double* in_grad, const double* w,
                double* w_grad, const double* out_grad, double* out) {
  const std::size_t in_plane = g.in.count();
  const std::size_t out_plane = g.out.count();
  const std::size_t taps = g.taps();
  for (std::size_t co = 0; co < g.cout; ++co) {
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const std::size_t wbase = (co * g.cin + ci) * taps;
      const double* in_c = in ? in + ci * in_plane : nullptr;
      double* gin_c = in_grad ? in_grad + ci * in_plane : nullptr;
      const double* gout_c = out_grad ? out_grad + co * out_plane : nullptr;
      double* out_c = out ? out + co * out_plane : nullptr;
      for (std::size_t kz = 0; kz < g.k[0]; ++kz) {
        const Span rz = valid_outputs(g.out.n[0], g.in.n[0], g.stride[0], g.pad[0], kz);
        for (std::size_t ky = 0; ky < g.k[1]; ++ky) {
          const Span ry = valid_outputs(g.out.n[1], g.in.n[1], g.stride[1], g.pad[1], ky);
          for (std::size_t kx = 0; kx < g.k[2]; ++kx) {
            const Span rx = valid_outputs(g.out.n[2], g.in.n[2], g.stride[2], g.pad[2], kx);
            const std::size_t widx = wbase + (kz * g.k[1] + ky) * g.k[2] + kx;
            const double wv = w ? w[widx] : 0.0;
            double wacc = 0.0;
            const long sx = static_cast<long>(g.stride[2]);
            const long xoff = static_cast<long>(kx) - g.pad[2];
            for (long oz = rz.lo; oz < rz.hi; ++oz) {
              const long iz = oz * static_cast<long>(g.stride[0]) - g.pad[0] + static_cast<long>(kz);
              for (long oy = ry.lo; oy < ry.hi; ++oy) {
                const long iy = oy * static_cast<long>(g.stride[1]) - g.pad[1] + static_cast<long>(ky);
                const std::size_t orow = (static_cast<std::size_t>(oz) * g.out.n[1] + oy) * g.out.n[2];
                const std::size_t irow = (static_cast<std::size_t>(iz) * g.in.n[1] + iy) * g.in.n[2];
                if constexpr (pass == ConvPass::Forward) {
                  double* o = out_c + orow;
                  const double* i = in_c + irow;
                  if (sx == 1) {
                    for (long ox = rx.lo; ox < rx.hi; ++ox) o[ox] += wv * i[ox + xoff];
                  } else {
                    for (long ox = rx.lo; ox < rx.hi; ++ox) o[ox] += wv * i[ox * sx + xoff];
                  }
                } else if constexpr (pass == ConvPass::InputGrad) {
                  const double* go = gout_c + orow;
                  double* gi = gin_c + irow;
                  if (sx == 1) {
                    for (long ox = rx.lo; ox < rx.hi; ++ox) gi[ox + xoff] += wv * go[ox];
                  } else {
                    for (long ox = rx.lo; ox < rx.hi; ++ox) gi[ox * sx + xoff] += wv * go[ox];
                  }
                } else {
                  const double* go = gout_c + orow;
                  const double* i = in_c + irow;
                  double acc = 0.0;
                  if (sx == 1) {
                    for (long ox = rx.lo; ox < rx.hi; ++ox) acc += go[ox] * i[ox + xoff];
                  } else {
                    for (long ox = rx.lo; ox < rx.hi; ++ox) acc += go[ox] * i[ox * sx + xoff];
                  }
                  wacc += acc;
                }
              }
            }
            if constexpr (pass == ConvPass::WeightGrad) w_grad[widx] += wacc;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Linear interpolation helpers

struct AxisSample {
  std::size_t i0 = 0, i1 = 0;
  double w0 = 1.0, w1 = 0.0;
  double dmask = 0.0;  // 1 when the coordinate was not clamped
  std::size_t taps = 1;
};

inline AxisSample axis_sample(double x, std::size_t n) {
  AxisSample s;
  if (n == 1) return s;
  const double hi = static_cast<double>(n - 1);
  s.dmask = (x >= 0.0 && x <= hi) ? 1.0 : 0.0;
  const double xc = std::clamp(x, 0.0, hi);
  const std::size_t i0 = std::min(static_cast<std::size_t>(std::floor(xc)), n - 2);
  const double f = xc - static_cast<double>(i0);
  s.i0 = i0;
  s.i1 = i0 + 1;
  s.w0 = 1.0 - f;
  s.w1 = f;
  s.taps = 2;
  return s;
}

struct SamplePoint {
  std::array<AxisSample, 3> axis;
};

SamplePoint sample_point(const Grid3& g, const double* disp, std::size_t plane, std::size_t z,
                         std::size_t y, std::size_t x) {
  const std::size_t p = (z * g.n[1] + y) * g.n[2] + x;
  const std::array<std::size_t, 3> pos{z, y, x};
  SamplePoint sp;
  for (std::size_t a = 0; a < 3; ++a) {
    double coord = static_cast<double>(pos[a]);
    if (a >= 3 - g.spatial_rank) {
      const std::size_t comp = a - (3 - g.spatial_rank);
      coord += disp[comp * plane + p];
    }
    sp.axis[a] = axis_sample(coord, g.n[a]);
  }
  return sp;
}

// ---------------------------------------------------------------------------
// Separable box filter

void box_filter_axis(const double* in, double* out, std::size_t channels, const Grid3& g,
                     std::size_t axis, std::size_t radius, std::vector<double>& prefix) {
  const std::size_t n = g.n[axis];
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < 3; ++a) stride *= g.n[a];
  const std::size_t outer = g.count() / (n * stride);
  prefix.assign(n + 1, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    const std::size_t cbase = c * g.count();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t s = 0; s < stride; ++s) {
        const std::size_t base = cbase + o * n * stride + s;
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + in[base + i * stride];
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t lo = i >= radius ? i - radius : 0;
          const std::size_t hi = std::min(i + radius, n - 1) + 1;
          out[base + i * stride] = prefix[hi] - prefix[lo];
        }
      }
    }
  }
}

Tensor box_filter(const Tensor& x, std::size_t window) {
  const Grid3 g = canonical_grid(x.shape(), 1);
  const std::size_t channels = x.extent(0);
  const std::size_t radius = window / 2;
  Tensor cur = x;
  Tensor next(x.shape());
  std::vector<double> prefix;
  for (std::size_t d = 0; d < g.spatial_rank; ++d) {
    const std::size_t a = g.canonical_axis(d);
    box_filter_axis(cur.data(), next.data(), channels, g, a, radius, prefix);
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise and reductions

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t, const Tensor& g) {
    accumulate(t.grad_buffer(ia), g);
    accumulate(t.grad_buffer(ib), g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t, const Tensor& g) {
    accumulate(t.grad_buffer(ia), g);
    accumulate(t.grad_buffer(ib), g, -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, factor](Tape& t, std::size_t, const Tensor& g) {
    accumulate(t.grad_buffer(ia), g, factor);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::scalar(s), {a}, [ia](Tape& t, std::size_t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (double& v : ga->values()) v += g[0];
    }
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_squares(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v * v;
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::scalar(s), {a}, [ia](Tape& t, std::size_t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      const Tensor& av = t.value(ia);
      for (std::size_t i = 0; i < av.size(); ++i) (*ga)[i] += 2.0 * g[0] * av[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Network layers

Var conv(Var input, Var kernel, Var bias, std::size_t stride, Padding padding) {
  if (input.value().empty()) throw ShapeError("conv: empty input");
  const ConvGeometry g =
      conv_geometry(input.shape(), kernel.shape(), bias.shape(), stride, padding);

  Extents out_shape{g.cout};
  for (std::size_t d = 0; d < g.in.spatial_rank; ++d) out_shape.push_back(g.out.n[g.in.canonical_axis(d)]);
  Tensor out(out_shape);
  const std::size_t plane = g.out.count();
  const Tensor& b = bias.value();
  for (std::size_t co = 0; co < g.cout; ++co) {
    std::fill_n(out.data() + co * plane, plane, b[co]);
  }
  conv_loops<ConvPass::Forward>(g, input.value().data(), nullptr, kernel.value().data(), nullptr,
                                nullptr, out.data());

  const std::size_t ii = input.id(), ik = kernel.id(), ib = bias.id();
  return input.tape().record(
      std::move(out), {input, kernel, bias}, [g, ii, ik, ib, plane](Tape& t, std::size_t, const Tensor& gout) {
        if (Tensor* gi = t.grad_buffer(ii)) {
          conv_loops<ConvPass::InputGrad>(g, nullptr, gi->data(), t.value(ik).data(), nullptr,
                                          gout.data(), nullptr);
        }
        if (Tensor* gk = t.grad_buffer(ik)) {
          conv_loops<ConvPass::WeightGrad>(g, t.value(ii).data(), nullptr, nullptr, gk->data(),
                                           gout.data(), nullptr);
        }
        if (Tensor* gb = t.grad_buffer(ib)) {
          for (std::size_t co = 0; co < g.cout; ++co) {
            double s = 0.0;
            const double* go = gout.data() + co * plane;
            for (std::size_t p = 0; p < plane; ++p) s += go[p];
            (*gb)[co] += s;
          }
        }
      });
}

Var leaky_relu(Var x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw std::invalid_argument("leaky_relu: slope must be in (0, 1)");
  Tensor out = x.value();
  for (double& v : out.values()) v = v >= 0.0 ? v : slope * v;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, slope](Tape& t, std::size_t, const Tensor& g) {
    if (Tensor* gx = t.grad_buffer(ix)) {
      const Tensor& xv = t.value(ix);
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += xv[i] >= 0.0 ? g[i] : slope * g[i];
    }
  });
}

Var upsample_nearest(Var x, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("upsample_nearest: factor must be positive");
  if (factor == 1) return x;
  const Tensor& xv = x.value();
  const Grid3 gi = canonical_grid(xv.shape(), 1);
  Grid3 go = gi;
  Extents out_shape{xv.extent(0)};
  for (std::size_t d = 0; d < gi.spatial_rank; ++d) {
    const std::size_t a = gi.canonical_axis(d);
    go.n[a] *= factor;
    out_shape.push_back(go.n[a]);
  }
  std::array<std::size_t, 3> f{1, 1, 1};
  for (std::size_t d = 0; d < gi.spatial_rank; ++d) f[gi.canonical_axis(d)] = factor;

  const std::size_t channels = xv.extent(0);
  Tensor out(out_shape);
  // Source index for every output voxel; shared by forward and adjoint.
  auto source_index = [gi, go, f](std::size_t z, std::size_t y, std::size_t xx) {
    return ((z / f[0]) * gi.n[1] + y / f[1]) * gi.n[2] + xx / f[2];
  };
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = xv.data() + c * gi.count();
    double* dst = out.data() + c * go.count();
    for (std::size_t z = 0; z < go.n[0]; ++z)
      for (std::size_t y = 0; y < go.n[1]; ++y)
        for (std::size_t xx = 0; xx < go.n[2]; ++xx)
          dst[(z * go.n[1] + y) * go.n[2] + xx] = src[source_index(z, y, xx)];
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x},
                         [ix, gi, go, channels, source_index](Tape& t, std::size_t, const Tensor& g) {
                           Tensor* gx = t.grad_buffer(ix);
                           if (!gx) return;
                           for (std::size_t c = 0; c < channels; ++c) {
                             double* dst = gx->data() + c * gi.count();
                             const double* src = g.data() + c * go.count();
                             for (std::size_t z = 0; z < go.n[0]; ++z)
                               for (std::size_t y = 0; y < go.n[1]; ++y)
                                 for (std::size_t xx = 0; xx < go.n[2]; ++xx)
                                   dst[source_index(z, y, xx)] += src[(z * go.n[1] + y) * go.n[2] + xx];
                           }
                         });
}

Var concat_channels(Var a, Var b) {
  if (b.value().empty()) return a;
  if (a.value().empty()) return b;
  const Extents& sa = a.shape();
  const Extents& sb = b.shape();
  if (sa.size() != sb.size() || !std::equal(sa.begin() + 1, sa.end(), sb.begin() + 1)) {
    throw ShapeError("concat_channels: spatial mismatch " + to_string(sa) + " vs " + to_string(sb));
  }
  Extents out_shape = sa;
  out_shape[0] = sa[0] + sb[0];
  Tensor out(out_shape);
  const std::size_t na = a.value().size();
  std::copy_n(a.value().data(), na, out.data());
  std::copy_n(b.value().data(), b.value().size(), out.data() + na);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib, na](Tape& t, std::size_t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < na; ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += g[na + i];
    }
  });
}

Var box_sum(Var x, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw std::invalid_argument("box_sum: window must be odd");
  const Grid3 g = canonical_grid(x.shape(), 1);
  for (std::size_t d = 0; d < g.spatial_rank; ++d) {
    if (window > g.n[g.canonical_axis(d)]) {
      throw ShapeError("box_sum: window " + std::to_string(window) + " larger than volume " +
                       to_string(x.shape()));
    }
  }
  Tensor out = box_filter(x.value(), window);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, window](Tape& t, std::size_t, const Tensor& g) {
    if (Tensor* gx = t.grad_buffer(ix)) accumulate(gx, box_filter(g, window));
  });
}

// ---------------------------------------------------------------------------
// Spatial transformer

Var grid_sample(Var source, Var displacement) {
  const Tensor& src = source.value();
  const Tensor& disp = displacement.value();
  const Grid3 g = canonical_grid(src.shape(), 1);
  if (disp.rank() != src.rank() || disp.extent(0) != g.spatial_rank ||
      !std::equal(src.shape().begin() + 1, src.shape().end(), disp.shape().begin() + 1)) {
    throw ShapeError("grid_sample: displacement " + to_string(disp.shape()) +
                     " does not match source " + to_string(src.shape()));
  }
  const std::size_t channels = src.extent(0);
  const std::size_t plane = g.count();
  Tensor out(src.shape());
  for (std::size_t z = 0; z < g.n[0]; ++z) {
    for (std::size_t y = 0; y < g.n[1]; ++y) {
      for (std::size_t x = 0; x < g.n[2]; ++x) {
        const std::size_t p = (z * g.n[1] + y) * g.n[2] + x;
        const SamplePoint sp = sample_point(g, disp.data(), plane, z, y, x);
        const auto& [az, ay, ax] = sp.axis;
        for (std::size_t c = 0; c < channels; ++c) {
          const double* s = src.data() + c * plane;
          double v = 0.0;
          for (std::size_t bz = 0; bz < az.taps; ++bz) {
            const std::size_t iz = bz ? az.i1 : az.i0;
            const double wz = bz ? az.w1 : az.w0;
            for (std::size_t by = 0; by < ay.taps; ++by) {
              const std::size_t iy = by ? ay.i1 : ay.i0;
              const double wy = by ? ay.w1 : ay.w0;
              const std::size_t row = (iz * g.n[1] + iy) * g.n[2];
              v += wz * wy * (ax.w0 * s[row + ax.i0] + (ax.taps > 1 ? ax.w1 * s[row + ax.i1] : 0.0));
            }
          }
          out[c * plane + p] = v;
        }
      }
    }
  }

  const std::size_t is = source.id(), id = displacement.id();
  return source.tape().record(
      std::move(out), {source, displacement},
      [is, id, g, channels, plane](Tape& t, std::size_t, const Tensor& gout) {
        Tensor* gsrc = t.grad_buffer(is);
        Tensor* gdisp = t.grad_buffer(id);
        const Tensor& src = t.value(is);
        const Tensor& disp = t.value(id);
        const std::size_t first_real = 3 - g.spatial_rank;
        for (std::size_t z = 0; z < g.n[0]; ++z) {
          for (std::size_t y = 0; y < g.n[1]; ++y) {
            for (std::size_t x = 0; x < g.n[2]; ++x) {
              const std::size_t p = (z * g.n[1] + y) * g.n[2] + x;
              const SamplePoint sp = sample_point(g, disp.data(), plane, z, y, x);
              const auto& ax3 = sp.axis;
              std::array<double, 3> dcoord{0.0, 0.0, 0.0};
              for (std::size_t c = 0; c < channels; ++c) {
                const double go = gout[c * plane + p];
                if (go == 0.0) continue;
                const double* s = src.data() + c * plane;
                double* gs = gsrc ? gsrc->data() + c * plane : nullptr;
                for (std::size_t bz = 0; bz < ax3[0].taps; ++bz) {
                  const std::size_t iz = bz ? ax3[0].i1 : ax3[0].i0;
                  const double wz = bz ? ax3[0].w1 : ax3[0].w0;
                  const double dz = bz ? 1.0 : -1.0;
                  for (std::size_t by = 0; by < ax3[1].taps; ++by) {
                    const std::size_t iy = by ? ax3[1].i1 : ax3[1].i0;
                    const double wy = by ? ax3[1].w1 : ax3[1].w0;
                    const double dy = by ? 1.0 : -1.0;
                    for (std::size_t bx = 0; bx < ax3[2].taps; ++bx) {
                      const std::size_t ix = bx ? ax3[2].i1 : ax3[2].i0;
                      const double wx = bx ? ax3[2].w1 : ax3[2].w0;
                      const double dx = bx ? 1.0 : -1.0;
                      const std::size_t q = (iz * g.n[1] + iy) * g.n[2] + ix;
                      if (gs) gs[q] += wz * wy * wx * go;
                      if (gdisp) {
                        const double v = go * s[q];
                        dcoord[0] += dz * wy * wx * v;
                        dcoord[1] += wz * dy * wx * v;
                        dcoord[2] += wz * wy * dx * v;
                      }
                    }
                  }
                }
              }
              if (gdisp) {
                for (std::size_t a = first_real; a < 3; ++a) {
                  (*gdisp)[(a - first_real) * plane + p] += ax3[a].dmask * dcoord[a];
                }
              }
            }
          }
        }
      });
}

}  // namespace sgldreg
