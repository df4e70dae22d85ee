#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fsstdef/baseline.hpp"
#include "fsstdef/def.hpp"

using namespace fsstdef;

namespace {

TimeSeries tone(std::size_t n, double phase) {
  TimeSeries s;
  s.dt = 1.0 / 30.0;
  s.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.values[i] = std::cos(2.0 * std::numbers::pi * 0.2 * static_cast<double>(i) * s.dt + phase);
  return s;
}

}  // namespace

static void BM_DefSeries(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = tone(n, 0.0);
  const auto th = tone(n, -1.0);
  const auto q = tone(n, 0.4);
  const auto v = tone(n, -0.6);
  TimeSeries vr = v;
  for (auto& x : vr.values) x += 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(def_series(p, th, q, v, vr, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DefSeries)->Arg(3000)->Arg(30000)->Arg(300000);

static void BM_BandpassZeroPhase(benchmark::State& state) {
  const auto s = tone(static_cast<std::size_t>(state.range(0)), 0.3);
  const BandSpec band{0.2, 0.05, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(bandpass_zero_phase(s, band));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BandpassZeroPhase)->Arg(3000)->Arg(30000)->Unit(benchmark::kMicrosecond);

static void BM_DftPeaks(benchmark::State& state) {
  const auto s = tone(static_cast<std::size_t>(state.range(0)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(dft_peaks(s, 8, 0.05));
}
BENCHMARK(BM_DftPeaks)->Arg(3000)->Arg(30000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
