#include <benchmark/benchmark.h>

#include "gaussperc/chem.hpp"
#include "gaussperc/excursion.hpp"
#include "gaussperc/renorm.hpp"

namespace {

using namespace gaussperc;

GridField sampled(double side) {
  const Grid g = Grid::covering(2, {-side / 2, -side / 2, 0}, {side / 2, side / 2, 0}, 0.25);
  return FieldSampler(make_kernel(KernelKind::bargmann_fock, 2), g).sample({7, 0});
}

void BM_Label(benchmark::State& state) {
  const GridField f = sampled(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(excursion_set(f, 0.0));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.grid().size()));
}
BENCHMARK(BM_Label)->Arg(25)->Arg(100);

void BM_LocalUniqueness(benchmark::State& state) {
  const GridField f = sampled(60);
  const ExcursionSet set = excursion_set(f, 0.3);
  const BoxSpec box{{0, 0, 0}, 20.0, 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(local_uniqueness(set, box));
}
BENCHMARK(BM_LocalUniqueness);

void BM_ChemicalDistance(benchmark::State& state) {
  const GridField f = sampled(120);
  const ExcursionSet set = excursion_set(f, 1.5);
  const Grid& g = f.grid();
  const Index a = g.nearest({-50, 0, 0});
  const Index b = g.nearest({50, 0, 0});
  for (auto _ : state) benchmark::DoNotOptimize(chem::chemical_distance(set, a, b));
}
BENCHMARK(BM_ChemicalDistance);

void BM_GlobalStructure(benchmark::State& state) {
  const std::int64_t N = state.range(0);
  const std::int64_t m = renorm::structure_margin(N, 0.5);
  const Grid w(2, {N + 1 + 2 * m, 2 * m + 1, 1}, 1.0);
  const auto config = renorm::SiteConfiguration::bernoulli(w, 10.0, 0.99, {3, 0});
  const Index a{m, m, 0}, b{m + N, m, 0};
  for (auto _ : state) benchmark::DoNotOptimize(renorm::global_structure(config, a, b));
}
BENCHMARK(BM_GlobalStructure)->Arg(16)->Arg(64);

}  // namespace
