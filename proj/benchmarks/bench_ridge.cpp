#include <benchmark/benchmark.h>

#include "fsstdef/components.hpp"
#include "fsstdef/ridge.hpp"
#include "fsstdef/synth.hpp"
#include "fsstdef/tfa.hpp"

using namespace fsstdef;

namespace {

struct Fixture {
  TfGrid t;
  MagnitudeGrid m;
  Fixture() {
    const auto s = square_chirp(ChirpSpec{});
    TfParams p;
    p.max_freq_hz = 5.0;
    t = fsst(s, make_window(2.5, s.dt), p);
    m = magnitude(t);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

static void BM_ExtractRidge(benchmark::State& state) {
  const auto& m = fixture().m;
  for (auto _ : state) benchmark::DoNotOptimize(extract_ridge(m, static_cast<double>(state.range(0))));
}
BENCHMARK(BM_ExtractRidge)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_ExtractRidges(benchmark::State& state) {
  const auto& m = fixture().m;
  RidgeParams p;
  p.n_ridges = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(extract_ridges(m, p));
}
BENCHMARK(BM_ExtractRidges)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Reconstruct(benchmark::State& state) {
  const auto& f = fixture();
  const Ridge r = extract_ridge(f.m, 2.0);
  const double d = default_band_halfwidth(f.t.df());
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct(f.t, r, d));
}
BENCHMARK(BM_Reconstruct)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
