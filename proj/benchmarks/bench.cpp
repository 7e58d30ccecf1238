#include <benchmark/benchmark.h>

#include <random>

#include "hyperplateau/catenoid.hpp"
#include "hyperplateau/h3core.hpp"
#include "hyperplateau/hull_width.hpp"
#include "hyperplateau/mesh_surface.hpp"
#include "hyperplateau/plateau.hpp"

using namespace hyperplateau;

namespace {

DiskMesh disk(int rings) {
  return init_mesh(ellipse(0.0, 1.2, 1.0, boundary_samples(rings)), 0.05, rings);
}

void BM_Dist(benchmark::State& state) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-2, 2), lz(-2, 1.5);
  std::vector<PointH3> pts;
  for (int k = 0; k < 1024; ++k) pts.emplace_back(u(g), u(g), std::exp(lz(g)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dist(pts[i % 1024], pts[(i + 1) % 1024]));
    ++i;
  }
}
BENCHMARK(BM_Dist);

void BM_AreaGradient(benchmark::State& state) {
  const DiskMesh m = disk(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(area_gradient(m));
  state.counters["vertices"] = static_cast<double>(m.num_vertices());
}
BENCHMARK(BM_AreaGradient)->Arg(16)->Arg(48);

void BM_PrincipalCurvatures(benchmark::State& state) {
  const DiskMesh m = disk(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(principal_curvatures(m));
}
BENCHMARK(BM_PrincipalCurvatures)->Arg(16)->Arg(48);

void BM_MinimizeSteps(benchmark::State& state) {
  const DiskMesh m = disk(24);
  SolveConfig c;
  c.rings = 24;
  c.max_iters = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(minimize(m, c));
}
BENCHMARK(BM_MinimizeSteps)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Profile(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(profile(0.8));
}
BENCHMARK(BM_Profile)->Unit(benchmark::kMillisecond);

void BM_WidthEstimate(benchmark::State& state) {
  const Polyline e = ellipse(0.0, 1.2, 1.0, 256);
  for (auto _ : state) benchmark::DoNotOptimize(width_estimate(e, static_cast<int>(state.range(0)), 48));
}
BENCHMARK(BM_WidthEstimate)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
