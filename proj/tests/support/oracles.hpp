#pragma once

// Reference implementations used only to check the library. They favour
// directness over speed and share no code with core/.

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

/// V[k][t] = dt * sum_n s[t+n] g[n] exp(-j 2 pi k n / n_fft), g peak-normalised
/// Gaussian truncated at ceil(trunc * sigma / dt), zero outside the record.
std::vector<std::vector<std::complex<double>>> direct_stft(const std::vector<double>& s, double dt, double sigma,
                                                           std::size_t n_fft, std::size_t n_bins, double trunc = 5.0);

/// Global maximiser of sum_t ln(M[f_t][t] + eps) - penalty * |f_t - f_{t-1}|
/// by dynamic programming. m is frequency-major: m[f][t].
std::vector<std::size_t> dp_ridge(const std::vector<std::vector<double>>& m, double penalty);

/// Closed-curve integral of P dTheta for P = A sin(w t + a), Theta = B sin(w t + b)
/// over `cycles` periods, by the composite trapezoid rule on `steps` points.
double trapezoid_def(double a_amp, double a_phase, double b_amp, double b_phase, double omega, double cycles,
                     std::size_t steps);

/// |analytic signal| via an O(n^2) DFT with the one-sided spectrum doubled.
std::vector<double> hilbert_envelope(const std::vector<double>& x);

/// Least-squares amplitude and phase of a cos(2 pi f t + phase) fit.
struct ToneFit {
  double amplitude = 0.0;
  double phase = 0.0;
};
ToneFit fit_tone(const std::vector<double>& x, double dt, double f_hz, std::size_t first, std::size_t last);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
/// Plain split-on-comma reader.
CsvTable read_csv(const std::string& text);

/// Ordinary least squares y = a + b x.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace oracle
