#include <benchmark/benchmark.h>

#include "fpi/generator.hpp"
#include "fpi/random.hpp"
#include "fpi/stepper.hpp"
#include "fpi/stokes.hpp"

namespace {

fpi::Grid desk_grid(int n) {
  fpi::GridSpec spec;
  spec.dim = 2;
  spec.cells = {n, n, 1};
  spec.poisson_mu = 1.0 / 3.0;
  return fpi::Grid::build(spec);
}

void bm_leray_project(benchmark::State& state) {
  const fpi::Grid grid = desk_grid(static_cast<int>(state.range(0)));
  fpi::RngStream rng(1, 21);
  fpi::VelocityField w(grid);
  for (int c = 0; c < grid.dim(); ++c) {
    for (auto& v : w.comp[c]) v = rng.symmetric();
  }
  for (int c = 0; c < grid.dim(); ++c) {
    for (int k = 0; k < grid.comp_extent(c, 2); ++k) {
      for (int j = 0; j < grid.comp_extent(c, 1); ++j) {
        for (int i = 0; i < grid.comp_extent(c, 0); ++i) {
          if (grid.normal_boundary_face(c, i, j, k)) w.at(c, i, j, k) = 0.0;
        }
      }
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fpi::leray_project(w));
  }
}
BENCHMARK(bm_leray_project)->Arg(16)->Arg(32);

void bm_stationary_stokes(benchmark::State& state) {
  const fpi::Grid grid = desk_grid(static_cast<int>(state.range(0)));
  const fpi::VelocityField g = fpi::vortex_field(grid, 1.0);
  const fpi::PlateField psi = fpi::pluck_plate_field(grid, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fpi::solve_stationary_stokes(g, psi, 1e-8));
  }
}
BENCHMARK(bm_stationary_stokes)->Arg(16);

void bm_step(benchmark::State& state) {
  const fpi::Grid grid = desk_grid(static_cast<int>(state.range(0)));
  const fpi::PotentialSpec potential = fpi::PotentialSpec::quartic(1.0);
  fpi::TimeParams params;
  params.dt = 5e-3;
  const fpi::VelocityField forcing = fpi::vortex_field(grid, 0.5);
  fpi::CoupledStepper stepper(grid, potential, params, forcing);
  fpi::RngStream rng(1, 22);
  fpi::SystemState u0 = fpi::random_state(grid, rng, 1.0);
  for (auto _ : state) {
    stepper.step(u0);
    benchmark::DoNotOptimize(u0.t);
  }
}
BENCHMARK(bm_step)->Arg(16)->Arg(32);

void bm_assemble_generator(benchmark::State& state) {
  const fpi::Grid grid = desk_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fpi::assemble_generator(grid));
  }
}
BENCHMARK(bm_assemble_generator)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
