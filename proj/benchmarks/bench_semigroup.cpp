#include <benchmark/benchmark.h>

#include "smolux/dynamics.hpp"
#include "smolux/feynman_kac.hpp"
#include "smolux/kernel_field.hpp"

namespace {

smolux::DynamicsModel drift_diffusion_2d() {
  smolux::SigmaSpec sigma;
  sigma.family = smolux::SigmaSpec::Family::kConstantIso;
  sigma.diag = {0.3, 0.3, 0.3};
  smolux::DriftSpec drift;
  drift.family = smolux::DriftSpec::Family::kLinear;
  drift.matrix = {2.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  return smolux::DynamicsModel(2, sigma, drift, 1.0, 0.09, 0.09);
}

void bench_apply_semigroup(benchmark::State& state) {
  const smolux::DynamicsModel dyn = drift_diffusion_2d();
  smolux::SpatialGrid grid;
  grid.dim = 2;
  grid.n_x = 16;
  grid.extent = 4.0;
  const smolux::BaseMeasure base = smolux::BaseMeasure::power_law(8, 2.0);
  smolux::KernelField field(grid, base, 0.5);
  smolux::McConfig mc;
  mc.n_paths = static_cast<int>(state.range(0));
  mc.dt = 1e-2;
  mc.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(smolux::apply_semigroup(dyn, field, 0.25, mc));
  }
  state.SetItemsProcessed(state.iterations() * grid.n_sites() * base.n_mass() *
                          mc.n_paths);
}

BENCHMARK(bench_apply_semigroup)->Arg(16)->Arg(64)->Arg(256);

}  // namespace
