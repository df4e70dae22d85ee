#include "fsstdef/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "fsstdef/error.hpp"
#include "fsstdef/fft.hpp"

namespace fsstdef {

namespace {

const double ripple_eps2 = std::pow(10.0, passband_ripple_db / 20.0) - 1.0;

double attenuation_db(double f_hz, const BandSpec& band, int order) {
  return -20.0 * std::log10(bandpass_gain(f_hz, band, order));
}

}  // namespace

void validate_band(const BandSpec& band, double nyquist_hz) {
  if (!(band.e > 0.0 && band.e < 0.5)) fail(ErrorCode::parameter, "band relative half-width e must lie in (0, 0.5)");
  if (!(band.f_center > 0.0)) fail(ErrorCode::parameter, "band centre must be positive");
  if (!((1.0 + 2.0 * band.e) * band.f_center < nyquist_hz)) {
    fail(ErrorCode::parameter, "band cutoff above Nyquist at f=" + std::to_string(band.f_center));
  }
}

double bandpass_gain(double f_hz, const BandSpec& band, int order) noexcept {
  if (!(f_hz > 0.0)) return 0.0;
  const double f1 = (1.0 - band.e) * band.f_center;
  const double f2 = (1.0 + band.e) * band.f_center;
  const double omega = (f_hz * f_hz - f1 * f2) / (f_hz * (f2 - f1));
  return 1.0 / (1.0 + ripple_eps2 * std::pow(omega * omega, order));
}

BandDesign design_band(const BandSpec& band) {
  BandDesign d;
  const double lo = (1.0 - 2.0 * band.e) * band.f_center;
  const double hi = (1.0 + 2.0 * band.e) * band.f_center;
  for (int order = 1; order <= max_butterworth_order; ++order) {
    d.order = order;
    d.attenuation_db = std::min(attenuation_db(lo, band, order), attenuation_db(hi, band, order));
    if (d.attenuation_db >= cutoff_attenuation_db) return d;
  }
  fail(ErrorCode::parameter, "band template infeasible: " + std::to_string(d.attenuation_db) + " dB at cutoff with order " +
                                 std::to_string(max_butterworth_order));
}

TimeSeries bandpass_zero_phase(const TimeSeries& s, const BandSpec& band) {
  require_valid(s, "band-pass input");
  validate_band(band, s.nyquist());
  const int order = design_band(band).order;
  return apply_zero_phase_gain(s, [&](double f) { return bandpass_gain(f, band, order); });
}

std::vector<SpectralPeak> dft_peaks(const TimeSeries& s, std::size_t max_peaks, double min_prominence_rel) {
  require_valid(s, "spectrum input");
  const std::size_t n = s.size();
  RealFft fft(n);
  std::copy(s.values.begin(), s.values.end(), fft.time_buffer().begin());
  fft.forward();
  const auto spec = fft.spectrum_buffer();
  const double df = 1.0 / (static_cast<double>(n) * s.dt);
  std::vector<double> mag(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);

  const double top = *std::max_element(mag.begin() + 1, mag.end());
  std::vector<SpectralPeak> peaks;
  for (std::size_t k = 1; k + 1 < mag.size(); ++k) {
    if (!(mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])) continue;
    if (mag[k] < min_prominence_rel * top) continue;
    const double f = static_cast<double>(k) * df;
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::ceil(0.9 * f / df)));
    const auto hi = std::min(mag.size() - 1, static_cast<std::size_t>(std::floor(1.1 * f / df)));
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += mag[j];
    const double local_mean = sum / static_cast<double>(hi - lo + 1);
    peaks.push_back({f, mag[k], local_mean > 0.0 ? mag[k] / local_mean : 0.0});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.magnitude > b.magnitude; });
  if (peaks.size() > max_peaks) peaks.resize(max_peaks);
  return peaks;
}

std::vector<DefSeries> fixed_band_pipeline(const BranchMeasurement& branch, const TimeSeries& v_raw,
                                           std::span<const BandSpec> bands, std::size_t onset) {
  std::vector<DefSeries> out;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const BandSpec& band = bands[i];
    DefSeries w = def_series(bandpass_zero_phase(branch.p, band), bandpass_zero_phase(branch.vang, band),
                             bandpass_zero_phase(branch.q, band), bandpass_zero_phase(branch.vmag, band), v_raw, onset);
    w.branch_id = branch.branch_id;
    w.harmonic = static_cast<int>(i + 1);
    w.ridge_id = i;
    out.push_back(std::move(w));
  }
  return out;
}

SegmentPlan plan_segments(const TimeSeries& s, const WindowedParams& params) {
  require_valid(s, "windowed pipeline input");
  if (!(params.segment_len_s > 0.0)) fail(ErrorCode::parameter, "segment length must be positive");
  const std::size_t n = s.size();
  const auto seg_n = static_cast<std::size_t>(std::lround(params.segment_len_s / s.dt));
  const double window_s = params.window_len_s > 0.0 ? params.window_len_s : params.segment_len_s;
  const auto win_n = static_cast<std::size_t>(std::lround(window_s / s.dt));
  if (seg_n < 2 || win_n < 4 || win_n > n) fail(ErrorCode::parameter, "segment/window length incompatible with the record");
  const std::size_t hop = win_n / 2;

  SegmentPlan plan;
  for (std::size_t a = 0; a < n; a += seg_n) plan.segments.emplace_back(a, std::min(n, a + seg_n));

  // Rectangular spectrogram, zero-padded for a fine peak position.
  const std::size_t nfft = next_pow2(16 * win_n);
  const double df = 1.0 / (static_cast<double>(nfft) * s.dt);
  RealFft fft(nfft);
  std::vector<std::vector<double>> seg_spectrum(plan.segments.size(), std::vector<double>(fft.bins(), 0.0));
  std::vector<std::size_t> seg_count(plan.segments.size(), 0);
  auto add_window = [&](std::size_t start, std::size_t seg) {
    auto buf = fft.time_buffer();
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy_n(s.values.begin() + static_cast<std::ptrdiff_t>(start), win_n, buf.begin());
    fft.forward();
    const auto spec = fft.spectrum_buffer();
    for (std::size_t k = 0; k < spec.size(); ++k) seg_spectrum[seg][k] += std::abs(spec[k]);
    ++seg_count[seg];
  };
  for (std::size_t start = 0; start + win_n <= n; start += hop) {
    const std::size_t centre = start + win_n / 2;
    add_window(start, std::min(centre / seg_n, plan.segments.size() - 1));
  }
  for (std::size_t k = 0; k < plan.segments.size(); ++k) {
    if (seg_count[k] > 0) continue;
    const std::size_t centre = (plan.segments[k].first + plan.segments[k].second) / 2;
    const std::size_t start = std::min(n - win_n, centre > win_n / 2 ? centre - win_n / 2 : 0);
    add_window(start, k);
  }
  double global = 0.0;
  for (std::size_t k = 0; k < plan.segments.size(); ++k) {
    for (auto& v : seg_spectrum[k]) {
      v /= static_cast<double>(seg_count[k]);
      global = std::max(global, v);
    }
  }

  // A peak must dominate its main-lobe neighbourhood so rectangular-window
  // sidelobes are not mistaken for harmonics.
  const auto guard = static_cast<std::size_t>(std::ceil(2.0 / (window_s * df)));
  std::map<int, std::vector<double>> centers;
  for (std::size_t k = 0; k < plan.segments.size(); ++k) {
    const auto& m = seg_spectrum[k];
    std::vector<std::size_t> peaks;
    for (std::size_t j = 1; j + 1 < m.size(); ++j) {
      if (m[j] < params.peak_rel * global) continue;
      const std::size_t lo = j > guard ? j - guard : 1;
      const std::size_t hi = std::min(m.size() - 1, j + guard);
      bool dominant = true;
      for (std::size_t i = lo; i <= hi && dominant; ++i) dominant = i == j || m[i] < m[j];
      if (dominant) peaks.push_back(j);
    }
    if (peaks.empty()) continue;
    const double f1 = static_cast<double>(peaks.front()) * df;
    std::map<int, std::size_t> best;
    for (std::size_t j : peaks) {
      const int h = static_cast<int>(std::lround(static_cast<double>(j) * df / f1));
      if (h < 1 || h > static_cast<int>(params.max_harmonic)) continue;
      if (!best.count(h) || m[j] > m[best[h]]) best[h] = j;
    }
    for (const auto& [h, j] : best) {
      auto& row = centers[h];
      row.resize(plan.segments.size(), 0.0);
      row[k] = static_cast<double>(j) * df;
    }
  }
  for (auto& [h, row] : centers) {
    plan.harmonics.push_back(h);
    plan.centers.push_back(std::move(row));
  }
  return plan;
}

namespace {

/// Partition-of-unity weight of segment k with linear ramps across interior boundaries.
double segment_weight(double t, double a, double b, bool first, bool last, double half_fade) {
  double w = 1.0;
  if (!first && half_fade > 0.0) w = std::min(w, std::clamp((t - (a - half_fade)) / (2.0 * half_fade), 0.0, 1.0));
  else if (!first && t < a) w = 0.0;
  if (!last && half_fade > 0.0) w = std::min(w, std::clamp(((b + half_fade) - t) / (2.0 * half_fade), 0.0, 1.0));
  else if (!last && t >= b) w = 0.0;
  return w;
}

TimeSeries stitch(const TimeSeries& s, const SegmentPlan& plan, const std::vector<double>& centers, double e,
                  double crossfade_s) {
  const std::size_t n = s.size();
  std::vector<double> out(n, 0.0);
  const double half = 0.5 * crossfade_s;
  const auto fade_n = static_cast<std::size_t>(std::ceil(half / s.dt)) + 1;
  for (std::size_t k = 0; k < plan.segments.size(); ++k) {
    if (!(centers[k] > 0.0)) continue;
    BandSpec band{centers[k], e, std::nullopt};
    if (!((1.0 + 2.0 * e) * centers[k] < s.nyquist())) continue;
    const TimeSeries y = bandpass_zero_phase(s, band);
    const auto [a, b] = plan.segments[k];
    const double ta = static_cast<double>(a) * s.dt;
    const double tb = static_cast<double>(b) * s.dt;
    const bool first = k == 0;
    const bool last = k + 1 == plan.segments.size();
    const std::size_t lo = first ? 0 : (a > fade_n ? a - fade_n : 0);
    const std::size_t hi = last ? n : std::min(n, b + fade_n);
    for (std::size_t i = lo; i < hi; ++i) {
      out[i] += segment_weight(static_cast<double>(i) * s.dt, ta, tb, first, last, half) * y.values[i];
    }
  }
  return with_values(s, std::move(out));
}

}  // namespace

std::vector<DefSeries> windowed_band_pipeline(const BranchMeasurement& branch, const TimeSeries& v_raw,
                                              const WindowedParams& params, std::size_t onset) {
  if (!(params.e > 0.0 && params.e < 0.5)) fail(ErrorCode::parameter, "band relative half-width e must lie in (0, 0.5)");
  if (!(params.crossfade_s >= 0.0)) fail(ErrorCode::parameter, "crossfade must be non-negative");
  const SegmentPlan plan = plan_segments(branch.p, params);
  std::vector<DefSeries> out;
  for (std::size_t i = 0; i < plan.harmonics.size(); ++i) {
    const auto& c = plan.centers[i];
    DefSeries w = def_series(stitch(branch.p, plan, c, params.e, params.crossfade_s),
                             stitch(branch.vang, plan, c, params.e, params.crossfade_s),
                             stitch(branch.q, plan, c, params.e, params.crossfade_s),
                             stitch(branch.vmag, plan, c, params.e, params.crossfade_s), v_raw, onset);
    w.branch_id = branch.branch_id;
    w.harmonic = plan.harmonics[i];
    w.ridge_id = i;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace fsstdef
