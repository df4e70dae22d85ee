#pragma once

#include <optional>
#include <variant>

#include "fsstdef/time_series.hpp"

namespace fsstdef {

struct MeanTrend {};

/// Centered moving average of the given width; windows shrink at the edges.
struct MovingAverageTrend {
  double window_s = 20.0;
};

using TrendMode = std::variant<MeanTrend, MovingAverageTrend>;

TimeSeries remove_trend(const TimeSeries& s, const TrendMode& mode);

/// Zero-phase low-pass: unit gain below 0.9 * cutoff, zero above
/// 1.1 * cutoff, raised-cosine taper in between.
TimeSeries lowpass_smooth(const TimeSeries& s, double cutoff_hz);

/// Gain of lowpass_smooth at frequency f.
double lowpass_gain(double f_hz, double cutoff_hz) noexcept;

struct DetrendSettings {
  TrendMode mode = MeanTrend{};
  /// nullopt disables the low-pass stage.
  std::optional<double> cutoff_hz = 2.0;
};

/// remove_trend followed by lowpass_smooth.
TimeSeries detrend(const TimeSeries& s, const DetrendSettings& settings);

}  // namespace fsstdef
