#include <benchmark/benchmark.h>

#include <random>

#include "sgldreg/diffeo.hpp"
#include "sgldreg/losses.hpp"
#include "sgldreg/metrics.hpp"
#include "sgldreg/network.hpp"
#include "sgldreg/ops.hpp"
#include "sgldreg/synthetic.hpp"

using namespace sgldreg;

namespace {

Tensor noise(const Extents& shape, std::uint64_t seed, double amplitude = 1.0) {
  Tensor t(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Extents grid_of(std::size_t n, std::size_t dims) { return Extents(dims, n); }

Extents with_channels(std::size_t c, const Extents& grid) {
  Extents s{c};
  s.insert(s.end(), grid.begin(), grid.end());
  return s;
}

void BM_Conv(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dims = static_cast<std::size_t>(state.range(1));
  const Extents grid = grid_of(n, dims);
  Extents ks{32, 16};
  ks.insert(ks.end(), dims, 3);
  const Tensor x = noise(with_channels(16, grid), 1), k = noise(ks, 2, 0.1), b = noise({32}, 3);
  for (auto _ : state) {
    Tape tape;
    Var y = conv(tape.constant(x), tape.constant(k), tape.constant(b), 1, Padding::Same);
    benchmark::DoNotOptimize(y.value()[0]);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(element_count(grid)));
}
BENCHMARK(BM_Conv)->Args({64, 2})->Args({128, 2})->Args({32, 3})->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  BackboneConfig bc;
  bc.spatial_dims = 2;
  const WeightSet w = init_weights(bc, 4);
  SyntheticSpec spec;
  spec.grid = {n, n};
  spec.seed = 5;
  const SyntheticPair p = generate_pair(spec);
  for (auto _ : state) {
    Tape tape;
    std::vector<Var> params;
    for (const auto& t : w.tensors) params.push_back(tape.variable(t));
    Var m = tape.constant(p.moving.tensor()), f = tape.constant(p.fixed.tensor());
    Var v = forward(m, f, params, bc);
    const LossTerms loss = total_loss(m, f, v, params, LossConfig{}, 6);
    tape.backward(loss.total);
    benchmark::DoNotOptimize(tape.gradient(params.front())[0]);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Integrate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dims = static_cast<std::size_t>(state.range(1));
  const Extents grid = grid_of(n, dims);
  const VectorField v(gaussian_smooth(noise(with_channels(dims, grid), 6, 3.0), 3.0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate(v, 6).tensor()[0]);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(element_count(grid)));
}
BENCHMARK(BM_Integrate)->Args({64, 2})->Args({256, 2})->Args({32, 3})->Unit(benchmark::kMillisecond);

void BM_Lcc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Volume a(noise({1, n, n}, 7)), b(noise({1, n, n}, 8));
  for (auto _ : state) benchmark::DoNotOptimize(lcc(a, b, 9));
}
BENCHMARK(BM_Lcc)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Jacobian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const VectorField f(noise({3, n, n, n}, 9, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(fold_percentage(f));
}
BENCHMARK(BM_Jacobian)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
