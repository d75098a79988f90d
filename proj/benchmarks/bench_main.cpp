#include <benchmark/benchmark.h>

#include "pmmap/map_core.hpp"
#include "pmmap/orbit.hpp"
#include "pmmap/random.hpp"
#include "pmmap/ulam.hpp"

using namespace pmmap;

static void BM_MapEvaluation(benchmark::State& st) {
  const auto p = make_params(0.5, 0.35, 0.05);
  Point z{0.3, 0.1};
  for (auto _ : st) {
    z = evaluate_map(z, p);
    if (z.x > 0.99) z.x = 0.3;
    benchmark::DoNotOptimize(z);
  }
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_MapEvaluation);

// The inner loop of every statistical run: x update plus theta-word shift.
static void BM_RandomDigitStep(benchmark::State& st) {
  const auto p = preset_params(st.range(0) ? "stable" : "decay");
  BitSource bits(Philox(1, 0));
  OrbitState s{0.3, ThetaWord::from_double(0.1)};
  for (auto _ : st) {
    step(s, p, &bits);
    if (s.x > 0.75) s.x = 4.0 * s.x - 3.0;
    benchmark::DoNotOptimize(s);
  }
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_RandomDigitStep)->Arg(0)->Arg(1);

static void BM_FirstReturn(benchmark::State& st) {
  const auto p = preset_params("decay");
  BitSource bits(Philox(2, 0));
  Philox g(3, 0);
  std::int64_t steps = 0;
  for (auto _ : st) {
    const auto e = first_return({0.75 + 0.2 * g.uniform_pos(), g.uniform()}, p, bits);
    steps += e.phi;
    benchmark::DoNotOptimize(e);
  }
  st.counters["f_steps"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_FirstReturn);

static void BM_Philox(benchmark::State& st) {
  Philox g(4, 0);
  for (auto _ : st) benchmark::DoNotOptimize(g());
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_Philox);

static void BM_UlamBuildY(benchmark::State& st) {
  const auto p = preset_params("decay");
  const auto mesh = make_mesh_Y(p, static_cast<int>(st.range(0)), static_cast<int>(st.range(0)));
  UlamBuildOptions o;
  o.threads = 1;
  for (auto _ : st) benchmark::DoNotOptimize(build_ulam_F(mesh, p, o));
}
BENCHMARK(BM_UlamBuildY)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_InvariantDensity(benchmark::State& st) {
  const auto p = preset_params("decay");
  const auto op = build_ulam_F(make_mesh_Y(p, 64, 64), p);
  for (auto _ : st) benchmark::DoNotOptimize(invariant_density(op));
}
BENCHMARK(BM_InvariantDensity)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
