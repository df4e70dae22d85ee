#pragma once

#include <complex>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fsstdef/time_series.hpp"

namespace fsstdef {

/// Peak-normalised sampled Gaussian g[n] = exp(-(n dt)^2 / (2 sigma^2)) for
/// n in [-half_length, half_length], together with its time derivative.
struct GaussianWindow {
  double sigma = 0.0;
  double dt = 0.0;
  std::size_t half_length = 0;
  std::vector<double> samples;
  std::vector<double> derivative;
  /// sqrt(2 ln 2) / sigma, in rad/s.
  double bandwidth_rad_s = 0.0;

  std::size_t length() const noexcept { return 2 * half_length + 1; }
  /// g at offset n (n in [-half_length, half_length]).
  double at(std::ptrdiff_t n) const noexcept { return samples[static_cast<std::size_t>(n + static_cast<std::ptrdiff_t>(half_length))]; }
};

GaussianWindow make_window(double sigma, double dt, double trunc_mult = 5.0);

/// Grid and threshold settings shared by the STFT/FSST family.
struct TfParams {
  /// FFT length; 0 picks the next power of two >= 8x the window length.
  std::size_t n_freq = 0;
  /// Time stride between frames, in samples.
  std::size_t hop = 1;
  /// Coefficients with |V| <= gamma_rel * max|V| are not reassigned.
  double gamma_rel = 1e-4;
  double trunc_mult = 5.0;
  /// Upper edge of the frequency axis; 0 keeps the full [0, Nyquist] range.
  double max_freq_hz = 0.0;
};

/// Complex time-frequency matrix, stored frequency-major: coeffs[f * n_times() + t].
struct TfGrid {
  std::vector<double> times;
  std::vector<double> freqs;
  std::vector<std::complex<double>> coeffs;

  std::size_t n_freqs() const noexcept { return freqs.size(); }
  std::size_t n_times() const noexcept { return times.size(); }
  std::complex<double>& at(std::size_t f, std::size_t t) noexcept { return coeffs[f * times.size() + t]; }
  const std::complex<double>& at(std::size_t f, std::size_t t) const noexcept { return coeffs[f * times.size() + t]; }
  double df() const noexcept { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
  double frame_dt() const noexcept { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// Reassigned frequency per STFT bin, plus the mask of bins above the threshold.
struct IfMap {
  std::size_t n_freqs = 0;
  std::size_t n_times = 0;
  std::vector<double> values;
  std::vector<unsigned char> valid;

  double value(std::size_t f, std::size_t t) const noexcept { return values[f * n_times + t]; }
  bool is_valid(std::size_t f, std::size_t t) const noexcept { return valid[f * n_times + t] != 0; }
};

enum class Taper { window, derivative };

/// FFT length actually used for `w` under `p`.
std::size_t resolve_fft_length(const GaussianWindow& w, const TfParams& p);

/// True when the signal is longer than the window's full support.
bool window_fits(const TimeSeries& s, const GaussianWindow& w) noexcept;

/// V(eta, t) = sum_tau s(tau) g(tau - t) exp(-j 2 pi eta (tau - t)) dt on a
/// one-sided grid. The signal is zero-extended outside its support.
TfGrid stft(const TimeSeries& s, const GaussianWindow& w, const TfParams& p = {}, Taper taper = Taper::window);

/// Local instantaneous frequency eta - Im{V_g' / (2 pi V_g)}, in Hz.
IfMap if_estimate(const TfGrid& v, const TfGrid& vd, double gamma_rel);

/// Moves every valid coefficient to the bin nearest its reassigned frequency.
/// Output values are densities: summing T * df over a band recovers the band's
/// share of the signal.
TfGrid synchrosqueeze(const TfGrid& v, const IfMap& if_map);

/// Fused STFT + reassignment. Identical to
/// synchrosqueeze(stft(s), if_estimate(stft(s), stft(s, derivative))) but only
/// the output grid is held in memory.
TfGrid fsst(const TimeSeries& s, const GaussianWindow& w, const TfParams& p = {});

/// Third-order Renyi entropy -0.5 log2(sum|T|^3 / sum|T|), in bits.
double renyi_entropy(const TfGrid& g);

/// Streaming form of renyi_entropy over magnitudes.
class RenyiAccumulator {
 public:
  void add(double magnitude) noexcept {
    sum1_ += magnitude;
    sum3_ += magnitude * magnitude * magnitude;
  }
  bool empty() const noexcept { return !(sum1_ > 0.0); }
  double entropy() const;

 private:
  double sum1_ = 0.0;
  double sum3_ = 0.0;
};

struct SigmaPoint {
  double sigma = 0.0;
  bool feasible = false;
  double fsst_entropy = 0.0;
  double stft_entropy = 0.0;
};

struct SigmaSelection {
  double sigma = 0.0;
  std::vector<SigmaPoint> curve;
  std::vector<std::string> warnings;
  std::size_t fft_length = 0;
};

/// Picks the window width whose FSST has minimum Renyi entropy. All grid points
/// share one FFT length so their entropies are comparable.
SigmaSelection select_sigma(const TimeSeries& s, std::span<const double> sigma_grid, const TfParams& p = {});

std::vector<double> default_sigma_grid();

enum class TfField { magnitude, phase };

/// First row: frequency axis; first column: time axis; cells: |coeff| or arg(coeff).
void write_tf_csv(std::ostream& out, const TfGrid& g, TfField field = TfField::magnitude);

}  // namespace fsstdef
