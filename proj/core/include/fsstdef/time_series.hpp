#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace fsstdef {

/// Uniformly sampled real signal; sample i sits at t0 + i * dt.
struct TimeSeries {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
  double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
  /// Record length n * dt.
  double duration() const noexcept { return static_cast<double>(values.size()) * dt; }
  double nyquist() const noexcept { return 0.5 / dt; }
};

/// Voltage or current angle in radians.
struct AngleSeries : TimeSeries {
  AngleSeries() = default;
  explicit AngleSeries(TimeSeries s) : TimeSeries(std::move(s)) {}
};

/// Throws a parameter error unless dt > 0 and the series has at least two samples.
void require_valid(const TimeSeries& s, std::string_view what);

/// Same t0, dt and length.
bool same_axis(const TimeSeries& a, const TimeSeries& b) noexcept;

TimeSeries with_values(const TimeSeries& axis, std::vector<double> values);

}  // namespace fsstdef
