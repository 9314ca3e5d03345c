#include <benchmark/benchmark.h>

#include "henonlab/horseshoe.hpp"
#include "henonlab/oracle1d.hpp"
#include "henonlab/potential2d.hpp"
#include "henonlab/saddles.hpp"
#include "henonlab/slices.hpp"

using namespace henonlab;

namespace {

const HenonParams kHorseshoe = HenonParams::make(6.0, 0.3);

void BM_Green2d(benchmark::State& state) {
  const Point2 p{1.5, -0.5};
  for (auto _ : state) benchmark::DoNotOptimize(green_2d(kHorseshoe, p, GreenSign::plus, 1e-12));
}
BENCHMARK(BM_Green2d);

void BM_Lyapunov1dErgodic(benchmark::State& state) {
  const QuadParam q = QuadParam::make(3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lyapunov_1d_ergodic(q, {static_cast<int>(state.range(0)), 40, 0}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Lyapunov1dErgodic)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_FindPeriodic(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(find_periodic(kHorseshoe, n, SearchMode::complex_grid));
}
BENCHMARK(BM_FindPeriodic)->DenseRange(2, 8, 2)->Unit(benchmark::kMillisecond);

void BM_Linearize(benchmark::State& state) {
  const SaddleRecord s = default_saddle(kHorseshoe);
  for (auto _ : state) benchmark::DoNotOptimize(linearize(kHorseshoe, s));
}
BENCHMARK(BM_Linearize)->Unit(benchmark::kMicrosecond);

void BM_RenderSlice(benchmark::State& state) {
  const Linearization lin = linearize(kHorseshoe, default_saddle(kHorseshoe));
  RenderConfig config;
  config.width = config.height = static_cast<int>(state.range(0));
  config.depth = 200;
  for (auto _ : state) benchmark::DoNotOptimize(render_slice(kHorseshoe, lin, default_window(lin), config));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_RenderSlice)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_CertifyHorseshoe(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(certify_horseshoe(10.0, 0.3));
}
BENCHMARK(BM_CertifyHorseshoe)->Unit(benchmark::kMillisecond);

void BM_EntropyCensus(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(entropy_census(10.0, 0.3, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_EntropyCensus)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
