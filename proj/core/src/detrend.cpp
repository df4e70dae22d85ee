#include "fsstdef/detrend.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fsstdef/error.hpp"
#include "fsstdef/fft.hpp"
#include "fsstdef/stats.hpp"

namespace fsstdef {

namespace {

TimeSeries subtract_moving_average(const TimeSeries& s, double window_s) {
  if (!(window_s >= 2.0 * s.dt) || !(window_s < s.duration())) {
    fail(ErrorCode::parameter, "moving-average window must satisfy 2*dt <= window < duration (got " +
                                   std::to_string(window_s) + " s)");
  }
  const std::size_t n = s.size();
  const auto half = static_cast<std::size_t>(std::floor(window_s / (2.0 * s.dt)));
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + s.values[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    const double avg = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    out[i] = s.values[i] - avg;
  }
  return with_values(s, std::move(out));
}

}  // namespace

TimeSeries remove_trend(const TimeSeries& s, const TrendMode& mode) {
  require_valid(s, "remove_trend");
  if (const auto* ma = std::get_if<MovingAverageTrend>(&mode)) {
    return subtract_moving_average(s, ma->window_s);
  }
  const double m = stats::mean(s.values);
  std::vector<double> out(s.values);
  for (double& v : out) v -= m;
  return with_values(s, std::move(out));
}

double lowpass_gain(double f_hz, double cutoff_hz) noexcept {
  const double lo = 0.9 * cutoff_hz;
  const double hi = 1.1 * cutoff_hz;
  if (f_hz <= lo) return 1.0;
  if (f_hz >= hi) return 0.0;
  const double x = (f_hz - lo) / (hi - lo);
  return 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

TimeSeries lowpass_smooth(const TimeSeries& s, double cutoff_hz) {
  require_valid(s, "lowpass_smooth");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < s.nyquist())) {
    fail(ErrorCode::parameter, "low-pass cutoff must lie in (0, Nyquist)");
  }
  return apply_zero_phase_gain(s, [cutoff_hz](double f) { return lowpass_gain(f, cutoff_hz); });
}

TimeSeries detrend(const TimeSeries& s, const DetrendSettings& settings) {
  TimeSeries out = remove_trend(s, settings.mode);
  if (settings.cutoff_hz) out = lowpass_smooth(out, *settings.cutoff_hz);
  return out;
}

}  // namespace fsstdef
