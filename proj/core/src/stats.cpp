#include "fsstdef/stats.hpp"
#include "fsstdef/error.hpp"
#include "fsstdef/time_series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fsstdef {

void require_valid(const TimeSeries& s, std::string_view what) {
  if (!(s.dt > 0.0) || !std::isfinite(s.dt)) {
    fail(ErrorCode::parameter, std::string(what) + ": sample interval must be positive");
  }
  if (s.size() < 2) {
    fail(ErrorCode::insufficient_data, std::string(what) + ": need at least 2 samples");
  }
}

bool same_axis(const TimeSeries& a, const TimeSeries& b) noexcept {
  return a.size() == b.size() && a.t0 == b.t0 && a.dt == b.dt;
}

TimeSeries with_values(const TimeSeries& axis, std::vector<double> values) {
  return TimeSeries{axis.t0, axis.dt, std::move(values)};
}

namespace stats {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double median(std::vector<double> x) {
  if (x.empty()) return 0.0;
  const auto mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  const double upper = x[mid];
  if (x.size() % 2 == 1) return upper;
  const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double mad(std::span<const double> x) {
  const double m = median(std::vector<double>(x.begin(), x.end()));
  std::vector<double> dev(x.size());
  std::transform(x.begin(), x.end(), dev.begin(), [m](double v) { return std::abs(v - m); });
  return median(std::move(dev));
}

double max_abs(std::span<const double> x) {
  double out = 0.0;
  for (double v : x) out = std::max(out, std::abs(v));
  return out;
}

double total_variation(std::span<const double> x) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += std::abs(x[i] - x[i - 1]);
  return acc;
}

}  // namespace stats
}  // namespace fsstdef
