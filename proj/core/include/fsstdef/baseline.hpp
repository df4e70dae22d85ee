#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fsstdef/def.hpp"
#include "fsstdef/pmu_data.hpp"

namespace fsstdef {

/// Pass band [(1-e) f, (1+e) f], cutoffs at (1 -+ 2e) f.
struct BandSpec {
  double f_center = 0.0;
  double e = 0.05;
  std::optional<std::pair<double, double>> segment;
};

void validate_band(const BandSpec& band, double nyquist_hz);

struct BandDesign {
  int order = 0;
  /// Worse of the two cutoff attenuations, in dB.
  double attenuation_db = 0.0;
};

inline constexpr double passband_ripple_db = 1.0;
inline constexpr double cutoff_attenuation_db = 10.0;
inline constexpr int max_butterworth_order = 20;

/// Lowest Butterworth order meeting the ripple / attenuation template.
BandDesign design_band(const BandSpec& band);

/// Magnitude-squared band-pass Butterworth response at f.
double bandpass_gain(double f_hz, const BandSpec& band, int order) noexcept;

/// Zero-phase band-pass applied as a frequency-domain mask.
TimeSeries bandpass_zero_phase(const TimeSeries& s, const BandSpec& band);

struct SpectralPeak {
  double freq_hz = 0.0;
  double magnitude = 0.0;
  /// Peak over the mean magnitude within +-10% of the peak frequency.
  double sharpness = 0.0;
};

/// Local maxima of the full-record DFT magnitude, strongest first.
std::vector<SpectralPeak> dft_peaks(const TimeSeries& s, std::size_t max_peaks, double min_prominence_rel);

/// One DEF series per band; `harmonic` carries the 1-based band index.
/// `branch` holds detrended channels, `v_raw` the voltage magnitude for the
/// dQ/V term.
std::vector<DefSeries> fixed_band_pipeline(const BranchMeasurement& branch, const TimeSeries& v_raw,
                                           std::span<const BandSpec> bands, std::size_t onset = 0);

struct WindowedParams {
  double segment_len_s = 10.0;
  /// Rectangular spectrogram window; hop is half of it. 0 = segment length.
  double window_len_s = 0.0;
  double e = 0.25;
  /// Peaks below this fraction of the spectrogram maximum are ignored.
  double peak_rel = 0.15;
  double crossfade_s = 1.0;
  std::size_t max_harmonic = 9;
};

/// Per-segment harmonic band centres (0 where a harmonic has no peak).
struct SegmentPlan {
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::vector<int> harmonics;
  /// centers[h_index][segment]
  std::vector<std::vector<double>> centers;
};

SegmentPlan plan_segments(const TimeSeries& s, const WindowedParams& params);

/// Segment-wise band-pass along the plan of the active-power channel, joined
/// with linear crossfades; DEF per harmonic on the joined signals.
std::vector<DefSeries> windowed_band_pipeline(const BranchMeasurement& branch, const TimeSeries& v_raw,
                                              const WindowedParams& params = {}, std::size_t onset = 0);

}  // namespace fsstdef
