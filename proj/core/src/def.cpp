#include "fsstdef/def.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fsstdef/csv.hpp"
#include "fsstdef/error.hpp"
#include "fsstdef/stats.hpp"

namespace fsstdef {

DefSeries def_series(const TimeSeries& dp, const TimeSeries& dtheta, const TimeSeries& dq, const TimeSeries& dv,
                     const TimeSeries& v, std::size_t onset) {
  for (const TimeSeries* s : {&dtheta, &dq, &dv, &v}) {
    if (!same_axis(dp, *s)) fail(ErrorCode::contract_violation, "DEF inputs do not share a time axis");
  }
  const std::size_t n = dp.size();
  if (n == 0) fail(ErrorCode::insufficient_data, "DEF inputs are empty");
  if (onset >= n) fail(ErrorCode::parameter, "onset index outside the record");
  for (double x : v.values) {
    if (!(x > 0.0)) fail(ErrorCode::data, "voltage magnitude must be positive for DEF");
  }

  DefSeries out;
  out.onset_index = onset;
  out.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.t[i] = dp.time(i);
  out.w.assign(n, 0.0);
  const auto& p = dp.values;
  const auto& th = dtheta.values;
  const auto& q = dq.values;
  const auto& vm = dv.values;
  for (std::size_t i = onset; i + 1 < n; ++i) {
    out.w[i + 1] = out.w[i] + p[i] * (th[i + 1] - th[i]) + q[i] / v.values[i] * (vm[i + 1] - vm[i]);
  }
  return out;
}

Onset detect_onset(std::span<const double> envelope, double dt, const OnsetParams& params) {
  if (!(params.k_mad > 0.0)) fail(ErrorCode::parameter, "k_mad must be positive");
  if (!(dt > 0.0)) fail(ErrorCode::parameter, "dt must be positive");
  Onset out;
  const std::size_t n = envelope.size();
  if (n == 0) return out;
  const double record = static_cast<double>(n) * dt;
  const double span = params.baseline_span_s > 0.0 ? params.baseline_span_s : 0.1 * record;
  if (span >= record) fail(ErrorCode::parameter, "onset baseline span must be shorter than the record");
  const std::size_t nb = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(span / dt)), 1, n);

  const std::span<const double> base = envelope.first(nb);
  const double med = stats::median({base.begin(), base.end()});
  const double noise = med + params.k_mad * 1.4826 * stats::mad(base);
  const double peak = *std::max_element(envelope.begin(), envelope.end());
  if (!(peak > 0.0)) {
    out.warning = "no oscillation energy; DEF integrated from the first sample";
    return out;
  }
  // Already oscillating at full strength inside the reference span.
  if (med >= 0.5 * peak) return out;

  for (std::size_t i = 0; i < n; ++i) {
    if (envelope[i] > noise) {
      out.index = i;
      return out;
    }
  }
  out.warning = "oscillation never exceeds the noise floor; DEF integrated from the first sample";
  return out;
}

Onset detect_onset(std::span<const Component> components, const OnsetParams& params) {
  if (components.empty()) fail(ErrorCode::parameter, "detect_onset needs at least one component");
  const auto it = std::find_if(components.begin(), components.end(), [](const Component& c) { return c.harmonic == 1; });
  const Component& c = it != components.end() ? *it : components.front();
  return detect_onset(c.envelope, c.signal.dt, params);
}

SlopeFit def_slope(const DefSeries& w, const FitSpan& span) {
  const std::size_t n = w.size();
  std::size_t first = w.onset_index;
  if (span.trailing_s) {
    if (!(*span.trailing_s > 0.0)) fail(ErrorCode::parameter, "trailing fit span must be positive");
    const double start = w.t.back() - *span.trailing_s;
    while (first < n && w.t[first] < start) ++first;
  }
  if (first >= n || n - first < 10) fail(ErrorCode::insufficient_data, "fewer than 10 samples to fit the DEF slope");

  const auto count = static_cast<double>(n - first);
  double mt = 0.0;
  double mw = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    mt += w.t[i];
    mw += w.w[i];
  }
  mt /= count;
  mw /= count;
  double stt = 0.0;
  double stw = 0.0;
  double sww = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double a = w.t[i] - mt;
    const double b = w.w[i] - mw;
    stt += a * a;
    stw += a * b;
    sww += b * b;
  }
  SlopeFit fit;
  fit.slope = stw / stt;
  fit.r_squared = sww > 0.0 ? (stw * stw) / (stt * sww) : 0.0;
  return fit;
}

SourceReport rank_sources(std::span<const DefSeries> series, const FitSpan& span) {
  if (series.empty()) fail(ErrorCode::parameter, "rank_sources needs at least one DEF series");
  SourceReport report;
  std::map<std::string, double> aggregate;
  std::map<std::string, double> fundamental;
  for (const auto& s : series) {
    const SlopeFit fit = def_slope(s, span);
    report.entries.push_back({s.branch_id, s.harmonic, s.ridge_id, fit.slope, fit.r_squared});
    aggregate[s.branch_id] += fit.slope;
    if (s.harmonic == 1) fundamental[s.branch_id] = std::max(fundamental[s.branch_id], std::abs(fit.slope));
  }
  auto fund = [&](const std::string& id) {
    const auto it = fundamental.find(id);
    return it == fundamental.end() ? 0.0 : it->second;
  };
  std::stable_sort(report.entries.begin(), report.entries.end(), [&](const SourceEntry& a, const SourceEntry& b) {
    if (a.slope != b.slope) return a.slope > b.slope;
    const double fa = fund(a.branch_id);
    const double fb = fund(b.branch_id);
    if (fa != fb) return fa > fb;
    return a.branch_id < b.branch_id;
  });
  for (const auto& [id, slope] : aggregate) report.branches.push_back({id, slope});
  std::stable_sort(report.branches.begin(), report.branches.end(), [&](const BranchAggregate& a, const BranchAggregate& b) {
    if (a.slope != b.slope) return a.slope > b.slope;
    const double fa = fund(a.branch_id);
    const double fb = fund(b.branch_id);
    if (fa != fb) return fa > fb;
    return a.branch_id < b.branch_id;
  });
  if (report.branches.front().slope > 0.0) report.verdict = report.branches.front().branch_id;
  return report;
}

void write_def_csv(std::ostream& out, std::span<const DefSeries> series) {
  out << "time_s,branch_id,harmonic,W\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << csv::format_real(s.t[i]) << ',' << s.branch_id << ',' << s.harmonic << ',' << csv::format_real(s.w[i]) << '\n';
    }
  }
}

}  // namespace fsstdef
