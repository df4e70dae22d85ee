#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>

#include "fsstdef/time_series.hpp"

namespace fsstdef {

/// Real-to-complex FFT of a fixed length backed by FFTW.
///
/// The object owns aligned input/output buffers and both plans. Plans are
/// created under a process-wide lock (the FFTW planner is not reentrant);
/// execution on distinct objects is safe from multiple threads.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept;
  /// n / 2 + 1 one-sided bins.
  std::size_t bins() const noexcept;

  std::span<double> time_buffer() noexcept;
  std::span<std::complex<double>> spectrum_buffer() noexcept;

  /// time_buffer -> spectrum_buffer, unnormalised (FFTW sign -1).
  void forward() noexcept;
  /// spectrum_buffer -> time_buffer, scaled by 1/n. Clobbers the spectrum.
  void inverse() noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Applies a real, even frequency-domain gain to a real series.
///
/// The series is mirrored to length 2n before transforming so the periodic
/// extension is continuous at both ends; the mirrored half is discarded after
/// the inverse transform. The result has exactly zero phase shift.
TimeSeries apply_zero_phase_gain(const TimeSeries& s, const std::function<double(double)>& gain_at_hz);

std::size_t next_pow2(std::size_t n) noexcept;

}  // namespace fsstdef
