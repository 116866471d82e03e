#include <benchmark/benchmark.h>

#include <numbers>
#include <vector>

#include "hvlab/characteristics.hpp"
#include "hvlab/counting.hpp"
#include "hvlab/experiment.hpp"
#include "hvlab/manybody.hpp"
#include "hvlab/phasefield.hpp"

using namespace hvlab;

namespace {
constexpr double kPi = std::numbers::pi;

PhaseGrid pv_grid(std::size_t n) {
  return PhaseGrid::make1d(CoordinateKind::PositionVelocity, n, kPi, n, kPi);
}

void bm_velocity_fourier(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto field = gaussian_packet(pv_grid(n), 0.6, 0.5, 0.4, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(velocity_fourier(field));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(n * n));
}

void bm_sobolev_norm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto field = gaussian_packet(pv_grid(n), 0.6, 0.5, 0.4, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sobolev_norm(field, 1));
  }
}

void bm_pair_step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto initial = pair_product(
      velocity_fourier(gaussian_packet(pv_grid(n), 0.6, 0.5, 0.4, 1)));
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  SolverParams params;
  params.dt = 1e-3;
  params.snapshot_stride = std::size_t{1} << 30;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_pseudo_schrodinger_pair(initial, spec, 4.0 * params.dt, params));
  }
  state.SetItemsProcessed(state.iterations() * 4);
}

void bm_nbody_flow(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto spec = PotentialSpec::cosine(1.0, 1.0, kPi);
  NBodyState z;
  for (std::size_t j = 0; j < n; ++j) {
    z.positions.push_back(-kPi + 2.0 * kPi * static_cast<double>(j) /
                                     static_cast<double>(n));
    z.velocities.push_back(0.3 - 0.01 * static_cast<double>(j));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow_nbody(spec, z, 0.1, 1e-3));
  }
  state.SetItemsProcessed(state.iterations() * 100 *
                          static_cast<std::int64_t>(n));
}

void bm_apply_weight(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 3;
  std::vector<Complex> alpha(dim);
  alpha[0] = Complex{0.6, 0.0};
  alpha[1] = Complex{0.0, 0.48};
  alpha[2] = Complex{0.64, 0.0};
  const auto prod = product_state(alpha, n);
  DiscreteState mixed = symmetrized(prod);
  const auto w = CountingWeight::m_lambda(n, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_weight(w, alpha, mixed));
  }
}
}  // namespace

BENCHMARK(bm_velocity_fourier)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_sobolev_norm)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_pair_step)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_nbody_flow)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_apply_weight)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
