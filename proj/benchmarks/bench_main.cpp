#include <benchmark/benchmark.h>

#include <cmath>

#include "branchwave/evolution.hpp"
#include "branchwave/free_propagator.hpp"
#include "branchwave/packets.hpp"
#include "branchwave/spectral.hpp"

using namespace branchwave;

namespace {

WaveField bump_state(const BranchedGrid& g) {
  WaveField psi(g);
  for (std::size_t id = 0; id < g.size(); ++id) {
    const auto& n = g.node(id);
    psi.values[id] = std::exp(-(n.x * n.x + (n.y + 2.0) * (n.y + 2.0))) * std::exp(cplx(0.0, 2.0 * n.y));
  }
  return psi;
}

}  // namespace

// Grid of 2 * (2 L / h)^2 nodes with h = 1/16.
static void BM_SpMV(benchmark::State& state) {
  const BranchedGrid g = build_grid({}, static_cast<double>(state.range(0)), 1.0 / 16.0);
  const DiscreteHamiltonian H = assemble_euclidean(g, 32.5);
  const WaveField psi = bump_state(g);
  cvec out(g.size());
  for (auto _ : state) {
    H.op.apply(psi.values, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(H.op.nonzeros()));
}
BENCHMARK(BM_SpMV)->Arg(8)->Arg(16);

static void BM_CrankNicolsonStep(benchmark::State& state) {
  const BranchedGrid g = build_grid({}, static_cast<double>(state.range(0)), 1.0 / 16.0);
  const DiscreteHamiltonian H = assemble_euclidean(g, 32.5);
  CrankNicolson cn(H, {0.0015, 1e-10, 400});
  cvec psi = bump_state(g).values;
  int iters = 0;
  for (auto _ : state) iters += cn.step(psi).iterations;
  state.counters["solver_iterations"] = benchmark::Counter(iters, benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_CrankNicolsonStep)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_PacketQuadrature(benchmark::State& state) {
  const BandProfile p = bump_profile(-8.0, 8.0);
  std::vector<double> xs;
  for (int k = 0; k < 256; ++k) xs.push_back(-8.0 + k / 16.0);
  const double t = 0.01 * static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(position_values(p, 0.0, 0.0, xs, t));
}
BENCHMARK(BM_PacketQuadrature)->Arg(0)->Arg(24)->Unit(benchmark::kMicrosecond);

static void BM_FreePropagator(benchmark::State& state) {
  PacketSpec spec;
  spec.a = 8.0;
  PlanarGrid g;
  g.h = 1.0 / 16.0;
  g.nx = 256;
  g.ny = 512;
  g.x0 = -0.5 * (g.nx - 1) * g.h;
  g.y0 = -0.5 * (g.ny - 1) * g.h;
  const PlanarField v0 = packet_values(spec, g, 0.0, spec.s + 0.5);
  FreePropagator prop(g, spec.s + 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(prop.propagate(v0, 0.1));
}
BENCHMARK(BM_FreePropagator)->Unit(benchmark::kMillisecond);

static void BM_TailMassDecay(benchmark::State& state) {
  PacketSpec spec;
  spec.a = 1.0;
  spec.s = 2.0;
  const std::vector<double> times{8.0, 64.0, 512.0};
  for (auto _ : state) benchmark::DoNotOptimize(tail_mass_decay(spec, times));
}
BENCHMARK(BM_TailMassDecay)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
