#include "polyent/catalog.hpp"
#include "polyent/convexity.hpp"
#include "polyent/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace polyent;

namespace {

const Catalog& cat() {
  static Catalog c = Catalog::open_default();
  return c;
}

Exec mode(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_DoubleDescription(benchmark::State& st) {
  HPolytope p = cat().polytope(cat().load("233-generic"));
  for (auto _ : st) benchmark::DoNotOptimize(enumerate_vertices(p, mode(st)));
}

void BM_FacetHull(benchmark::State& st) {
  VPolytope v = enumerate_vertices(cat().polytope(cat().load("234-generic")));
  for (auto _ : st) benchmark::DoNotOptimize(facet_hull(v, mode(st)));
}

void BM_OrbitSampling(benchmark::State& st) {
  PureState psi = representative_state(cat().load("233-psi4"));
  for (auto _ : st) benchmark::DoNotOptimize(sample_orbit_points(psi, 512, 1, 50.0, mode(st)));
}

void BM_MinSlack(benchmark::State& st) {
  const auto& e = cat().load("234-generic");
  HPolytope p = cat().polytope(e);
  auto pts = sample_orbit_points(representative_state(e), 4096, 2, 50.0);
  for (auto _ : st) benchmark::DoNotOptimize(batch_min_slack(p, pts, mode(st)));
}

}  // namespace

// argument 0 = serial reference, 1 = OpenMP
BENCHMARK(BM_DoubleDescription)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FacetHull)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OrbitSampling)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MinSlack)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
