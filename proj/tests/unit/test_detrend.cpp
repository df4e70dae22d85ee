#include <gtest/gtest.h>

#include <cmath>

#include "fsstdef/detrend.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fsstdef;
using testutil::error_of;
using testutil::pi;

TEST(RemoveTrend, ConstantMeanToZero) {
  const auto r = remove_trend(testutil::series(std::vector<double>(50, 7.0), 0.1), MeanTrend{});
  for (double v : r.values) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(RemoveTrend, ToneWithOffset) {
  auto s = testutil::tone(0.2, 10.0, 500);
  const auto clean = s.values;
  for (auto& v : s.values) v += 5.0;
  const auto r = remove_trend(s, MeanTrend{});
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r.values[i], clean[i], 1e-12);
}

TEST(RemoveTrend, MovingAverageRemovesRamp) {
  const double fs = 10.0;
  auto s = testutil::tone(0.2, fs, 2000);
  const auto clean = s.values;
  for (std::size_t i = 0; i < s.size(); ++i) s.values[i] += 0.01 * static_cast<double>(i) / fs;
  const auto r = remove_trend(s, MovingAverageTrend{20.0});
  std::vector<double> residual;
  for (std::size_t i = 200; i < 1800; ++i) residual.push_back(r.values[i] - clean[i]);
  EXPECT_LT(testutil::rms(residual), 0.05);
}

TEST(RemoveTrend, InvalidWindow) {
  const auto s = testutil::tone(0.2, 10.0, 100);
  EXPECT_EQ(error_of([&] { remove_trend(s, MovingAverageTrend{0.0}); }), ErrorCode::parameter);
  EXPECT_EQ(error_of([&] { remove_trend(s, MovingAverageTrend{1000.0}); }), ErrorCode::parameter);
}

TEST(LowpassSmooth, InBandToneUntouched) {
  const double fs = 30.0;
  const std::size_t n = 3000;
  const auto s = testutil::tone(0.3, fs, n, 1.0, 0.4);
  const auto y = lowpass_smooth(s, 2.0).values;
  const auto fit = oracle::fit_tone(y, s.dt, 0.3, n / 4, 3 * n / 4);
  EXPECT_NEAR(fit.amplitude, 1.0, 0.005);
  EXPECT_LT(std::abs(std::remainder(fit.phase - 0.4, 2.0 * pi)) * 180.0 / pi, 0.5);
}

TEST(LowpassSmooth, OutOfBandToneRejected) {
  const auto s = testutil::tone(5.0, 30.0, 3000);
  const auto y = lowpass_smooth(s, 2.0).values;
  EXPECT_LT(testutil::rms(y), 0.01 * testutil::rms(s.values));
}

TEST(LowpassSmooth, SuperpositionKeepsSlowTone) {
  const auto slow = testutil::tone(0.3, 30.0, 3000);
  const auto fast = testutil::tone(5.0, 30.0, 3000, 0.7);
  auto mix = slow;
  for (std::size_t i = 0; i < mix.size(); ++i) mix.values[i] += fast.values[i];
  const auto y = lowpass_smooth(mix, 2.0).values;
  std::vector<double> diff(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) diff[i] = y[i] - slow.values[i];
  EXPECT_LT(testutil::rms(diff), 0.01 * testutil::rms(slow.values));
}

TEST(LowpassSmooth, CutoffAboveNyquist) {
  const auto s = testutil::tone(0.3, 10.0, 100);
  EXPECT_EQ(error_of([&] { lowpass_smooth(s, 6.0); }), ErrorCode::parameter);
}

TEST(Detrend, DefaultIsMeanPlusLowpass) {
  auto s = testutil::tone(0.3, 30.0, 3000);
  const auto clean = s.values;
  for (std::size_t i = 0; i < s.size(); ++i) s.values[i] += 3.0 + 0.2 * std::cos(2.0 * pi * 6.0 * static_cast<double>(i) / 30.0);
  const auto y = detrend(s, DetrendSettings{}).values;
  std::vector<double> diff(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) diff[i] = y[i] - clean[i];
  EXPECT_LT(testutil::rms(diff, 300, 2700), 0.01);
}
