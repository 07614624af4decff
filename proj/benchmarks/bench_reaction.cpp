#include <benchmark/benchmark.h>

#include <vector>

#include "smolux/mass_measure.hpp"
#include "smolux/reaction.hpp"

namespace {

void bench_coag_parts(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const smolux::BaseMeasure base = smolux::BaseMeasure::power_law(n, 2.0);
  const smolux::CoagKernel kernel = smolux::CoagKernel::constant(n, 1.0);
  std::vector<double> f(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) f[k] = 1.0 / (1.0 + k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        smolux::coag_parts(kernel, f, base, smolux::OverflowPolicy::kDrop));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

BENCHMARK(bench_coag_parts)->Arg(16)->Arg(64)->Arg(256);

void bench_fragmentation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const smolux::BaseMeasure base = smolux::BaseMeasure::power_law(n, 2.0);
  std::vector<double> rates(static_cast<std::size_t>(n), 0.1);
  rates[0] = 0.0;
  const smolux::Fragmentation frag =
      smolux::Fragmentation::uniform_binary(base, rates);
  std::vector<double> f(static_cast<std::size_t>(n), 0.25);
  for (auto _ : state) {
    benchmark::DoNotOptimize(smolux::fragmentation_apply(frag, f, base));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

BENCHMARK(bench_fragmentation)->Arg(16)->Arg(64)->Arg(256);

}  // namespace
