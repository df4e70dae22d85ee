#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fsstdef/detrend.hpp"
#include "fsstdef/ridge.hpp"
#include "fsstdef/synth.hpp"
#include "fsstdef/tfa.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fsstdef;
using testutil::error_of;

namespace {

TfGrid fsst_of(const TimeSeries& s, double sigma, double max_freq, std::size_t hop = 1) {
  TfParams p;
  p.max_freq_hz = max_freq;
  p.hop = hop;
  return fsst(s, make_window(sigma, s.dt), p);
}

TimeSeries two_tones(double fs, std::size_t n) {
  auto s = testutil::tone(0.2, fs, n, 1.0);
  const auto weak = testutil::tone(0.6, fs, n, 0.3, 1.0);
  for (std::size_t i = 0; i < n; ++i) s.values[i] += weak.values[i];
  return s;
}

std::size_t bin_of(const MagnitudeGrid& m, double f) { return static_cast<std::size_t>(std::lround(f / m.df())); }

}  // namespace

TEST(ExtractRidge, ToneIsConstant) {
  const auto m = magnitude(fsst_of(testutil::tone(0.25, 30.0, 3000), 2.5, 2.0));
  const Ridge r = extract_ridge(m, 2.0);
  for (std::size_t t = 0; t < r.size(); ++t) EXPECT_EQ(r.bin_index[t], bin_of(m, 0.25));
}

TEST(ExtractRidge, ChirpWithinOneBinForAnyPenalty) {
  ChirpSpec spec;
  spec.waveform = Waveform::sine;
  const double sigma = 2.5;
  const auto s = square_chirp(spec);
  TfParams p;
  p.max_freq_hz = 1.0;
  p.n_freq = 2048;
  const auto m = magnitude(fsst(s, make_window(sigma, s.dt), p));
  for (double penalty : {0.0, 0.5, 2.0, 10.0}) {
    const Ridge r = extract_ridge(m, penalty);
    for (std::size_t t = 0; t < r.size(); ++t) {
      if (r.times[t] < 2 * sigma || r.times[t] > spec.duration - 2 * sigma) continue;
      EXPECT_LE(std::abs(r.freq_hz[t] - chirp_frequency(spec, r.times[t])), m.df()) << "penalty " << penalty << " t " << r.times[t];
    }
  }
}

TEST(ExtractRidge, StrongToneFirstAndMatchesDynamicProgramme) {
  const auto m = magnitude(fsst_of(two_tones(10.0, 600), 2.0, 1.0, 10));
  const Ridge r = extract_ridge(m, 2.0);
  std::vector<std::vector<double>> grid(m.n_freqs(), std::vector<double>(m.n_times()));
  for (std::size_t f = 0; f < m.n_freqs(); ++f) {
    for (std::size_t t = 0; t < m.n_times(); ++t) grid[f][t] = m.at(f, t);
  }
  EXPECT_EQ(r.bin_index, oracle::dp_ridge(grid, 2.0));
  for (std::size_t t = 0; t < r.size(); ++t) EXPECT_NEAR(r.freq_hz[t], 0.2, m.df());
}

TEST(ExtractRidge, ZeroMatrixHasNoRidge) {
  MagnitudeGrid m;
  m.freqs = {0, 0.1};
  m.times = {0, 1, 2};
  m.values.assign(6, 0.0);
  EXPECT_EQ(error_of([&] { extract_ridge(m, 1.0); }), ErrorCode::no_ridge);
  EXPECT_EQ(error_of([&] { extract_ridge(m, -1.0); }), ErrorCode::parameter);
}

TEST(ExtractRidges, SquareChirpOddHarmonics) {
  const ChirpSpec spec;
  const double sigma = 2.5;
  const auto s = detrend(square_chirp(spec), DetrendSettings{});
  const auto ridges = extract_ridges(magnitude(fsst_of(s, sigma, 5.0)), RidgeParams{});
  ASSERT_EQ(ridges.size(), 4u);
  std::vector<int> found;
  for (const auto& r : ridges) {
    double ratio = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < r.size(); ++t) {
      if (!r.is_valid(t) || r.times[t] < 2 * sigma || r.times[t] > spec.duration - 2 * sigma) continue;
      ratio += r.freq_hz[t] / chirp_frequency(spec, r.times[t]);
      ++n;
    }
    found.push_back(static_cast<int>(std::lround(ratio / static_cast<double>(n))));
  }
  std::sort(found.begin(), found.end());
  EXPECT_EQ(found, (std::vector<int>{1, 3, 5, 7}));
  EXPECT_GE(ridges[0].energy, ridges[1].energy);
}

TEST(ExtractRidges, SingleToneStopsEarly) {
  RidgeParams p;
  p.n_ridges = 3;
  const auto ridges = extract_ridges(magnitude(fsst_of(testutil::tone(0.25, 30.0, 3000), 2.5, 2.0)), p);
  EXPECT_EQ(ridges.size(), 1u);
}

TEST(ExtractRidges, TwoTonesBothRecovered) {
  RidgeParams p;
  p.n_ridges = 2;
  const auto m = magnitude(fsst_of(two_tones(30.0, 3000), 2.5, 2.0));
  const auto ridges = extract_ridges(m, p);
  ASSERT_EQ(ridges.size(), 2u);
  std::vector<double> mean;
  for (const auto& r : ridges) {
    double acc = 0.0;
    for (std::size_t t = 500; t < 2500; ++t) acc += r.freq_hz[t];
    mean.push_back(acc / 2000.0);
  }
  std::sort(mean.begin(), mean.end());
  EXPECT_NEAR(mean[0], 0.2, m.df());
  EXPECT_NEAR(mean[1], 0.6, m.df());
}

TEST(WriteRidgesCsv, Layout) {
  Ridge r;
  r.times = {0.0, 0.5};
  r.freq_hz = {0.25, 0.26};
  r.bin_index = {1, 1};
  r.magnitude = {1.0, 0.01};
  r.valid = {1, 0};
  std::ostringstream os;
  write_ridges_csv(os, std::span(&r, 1));
  const auto table = oracle::read_csv(os.str());
  EXPECT_EQ(table.header, (std::vector<std::string>{"time_s", "ridge_id", "freq_hz", "magnitude", "valid"}));
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[1][4], "0");
  EXPECT_DOUBLE_EQ(std::stod(table.rows[1][2]), 0.26);
}
