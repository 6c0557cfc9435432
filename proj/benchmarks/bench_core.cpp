#include <benchmark/benchmark.h>

#include "tracelab/cantor.hpp"
#include "tracelab/horseshoe.hpp"
#include "tracelab/manifolds.hpp"
#include "tracelab/orbits.hpp"
#include "tracelab/periodic.hpp"
#include "tracelab/surface.hpp"

using namespace tracelab;

static void BM_Iterate(benchmark::State& state) {
  const double V = -0.5;
  const Point3 p = project_to_level(Point3(0.2, 0.6, -0.1), V);
  for (auto _ : state) benchmark::DoNotOptimize(iterate(p, V, state.range(0)).points.back());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Iterate)->Arg(10000)->Arg(1000000);

static void BM_Lyapunov(benchmark::State& state) {
  const Point3 p = factor_map(TorusPoint(0.1234, 0.3141));
  for (auto _ : state) benchmark::DoNotOptimize(lyapunov_exponent(p, 0.0, 100000));
}
BENCHMARK(BM_Lyapunov);

static void BM_ChaosGrid(benchmark::State& state) {
  ChaosOptions co;
  co.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(chaos_grid(-0.5, static_cast<int>(state.range(0)), 1000, 0.01, co));
}
BENCHMARK(BM_ChaosGrid)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_FindPeriodic(benchmark::State& state) {
  const Point3 g(-0.7709, 0.3033, -0.7709);
  for (auto _ : state) benchmark::DoNotOptimize(find_periodic(-0.08, 2, g));
}
BENCHMARK(BM_FindPeriodic);

static void BM_GrowManifold(benchmark::State& state) {
  const PeriodicOrbit po = find_periodic(-0.08, 2, Point3(-0.7709, 0.3033, -0.7709));
  for (auto _ : state)
    benchmark::DoNotOptimize(grow_manifold(po, Side::Unstable, static_cast<double>(state.range(0)), 0.02));
}
BENCHMARK(BM_GrowManifold)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_Thickness(benchmark::State& state) {
  const CantorPresentation c = middle_alpha_cantor(1.0 / 3.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(thickness(c));
}
BENCHMARK(BM_Thickness)->Arg(8)->Arg(14);

static void BM_SurvivorSection(benchmark::State& state) {
  AvoidanceSpec spec;
  spec.depth = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(survivor_section(TorusPoint(0, 0), LineDirection::Stable, spec));
}
BENCHMARK(BM_SurvivorSection)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);

static void BM_BoxDimension(benchmark::State& state) {
  std::vector<Point2> pts;
  for (int i = 0; i < 500; ++i)
    for (int j = 0; j < 500; ++j) pts.push_back({i / 500.0, j / 500.0});
  const auto scales = geometric_scales(0.2, 0.01, 8);
  for (auto _ : state) benchmark::DoNotOptimize(box_dimension(pts, scales));
}
BENCHMARK(BM_BoxDimension)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
