#include <benchmark/benchmark.h>

#include <vector>

#include "fsstdef/synth.hpp"
#include "fsstdef/tfa.hpp"

using namespace fsstdef;

namespace {

TimeSeries chirp_of(double seconds) {
  ChirpSpec spec;
  spec.duration = seconds;
  return square_chirp(spec);
}

TfParams capped() {
  TfParams p;
  p.max_freq_hz = 5.0;
  return p;
}

}  // namespace

static void BM_Stft(benchmark::State& state) {
  const auto s = chirp_of(static_cast<double>(state.range(0)));
  const auto w = make_window(2.5, s.dt);
  for (auto _ : state) benchmark::DoNotOptimize(stft(s, w, capped()));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.size()));
}
BENCHMARK(BM_Stft)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_Fsst(benchmark::State& state) {
  const auto s = chirp_of(static_cast<double>(state.range(0)));
  const auto w = make_window(2.5, s.dt);
  for (auto _ : state) benchmark::DoNotOptimize(fsst(s, w, capped()));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.size()));
}
BENCHMARK(BM_Fsst)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_FsstHop(benchmark::State& state) {
  const auto s = chirp_of(100.0);
  const auto w = make_window(2.5, s.dt);
  auto p = capped();
  p.hop = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fsst(s, w, p));
}
BENCHMARK(BM_FsstHop)->Arg(1)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_SelectSigma(benchmark::State& state) {
  const auto s = chirp_of(100.0);
  const std::vector<double> grid{1.5, 2.5, 4.0};
  for (auto _ : state) benchmark::DoNotOptimize(select_sigma(s, grid, capped()));
}
BENCHMARK(BM_SelectSigma)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
