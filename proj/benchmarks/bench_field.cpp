#include <benchmark/benchmark.h>

#include "gaussperc/field.hpp"
#include "gaussperc/kernel.hpp"

namespace {

using namespace gaussperc;

void BM_SampleField(benchmark::State& state) {
  const double side = static_cast<double>(state.range(0));
  const Grid g = Grid::covering(2, {-side / 2, -side / 2, 0}, {side / 2, side / 2, 0}, 0.25);
  const FieldSampler sampler(make_kernel(KernelKind::bargmann_fock, 2), g);
  std::uint64_t t = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample({1, t++}));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * g.size()));
}
BENCHMARK(BM_SampleField)->Arg(16)->Arg(50)->Arg(100);

void BM_Discretize(benchmark::State& state) {
  const Grid g = Grid::covering(2, {-25, -25, 0}, {25, 25, 0}, 0.25);
  const FieldSampler sampler(make_kernel(KernelKind::bargmann_fock, 2, std::nullopt, 5.0), g);
  const GridField f = sampler.sample({1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(discretize(f, 0.5));
}
BENCHMARK(BM_Discretize);

}  // namespace
