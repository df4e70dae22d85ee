#include "fsstdef/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <mutex>

#include "fsstdef/error.hpp"

namespace fsstdef {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Impl {
  std::size_t n = 0;
  double* time = nullptr;
  fftw_complex* freq = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit Impl(std::size_t len) : n(len) {
    time = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    freq = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    if (time == nullptr || freq == nullptr) {
      release();
      throw std::bad_alloc();
    }
    std::fill(time, time + n, 0.0);
    std::lock_guard lock(planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), time, freq, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq, time, FFTW_ESTIMATE);
  }

  void release() noexcept {
    {
      std::lock_guard lock(planner_mutex());
      if (fwd != nullptr) fftw_destroy_plan(fwd);
      if (inv != nullptr) fftw_destroy_plan(inv);
    }
    fftw_free(time);
    fftw_free(freq);
    fwd = inv = nullptr;
    time = nullptr;
    freq = nullptr;
  }

  ~Impl() { release(); }
};

RealFft::RealFft(std::size_t n) {
  if (n < 2) fail(ErrorCode::parameter, "FFT length must be at least 2");
  impl_ = std::make_unique<Impl>(n);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

std::size_t RealFft::size() const noexcept { return impl_->n; }
std::size_t RealFft::bins() const noexcept { return impl_->n / 2 + 1; }

std::span<double> RealFft::time_buffer() noexcept { return {impl_->time, impl_->n}; }

std::span<std::complex<double>> RealFft::spectrum_buffer() noexcept {
  // fftw_complex is layout-compatible with std::complex<double>.
  return {reinterpret_cast<std::complex<double>*>(impl_->freq), bins()};
}

void RealFft::forward() noexcept { fftw_execute(impl_->fwd); }

void RealFft::inverse() noexcept {
  fftw_execute(impl_->inv);
  const double scale = 1.0 / static_cast<double>(impl_->n);
  for (std::size_t i = 0; i < impl_->n; ++i) impl_->time[i] *= scale;
}

std::size_t next_pow2(std::size_t n) noexcept { return std::bit_ceil(std::max<std::size_t>(n, 1)); }

TimeSeries apply_zero_phase_gain(const TimeSeries& s, const std::function<double(double)>& gain_at_hz) {
  require_valid(s, "zero-phase filter");
  const std::size_t n = s.size();
  RealFft fft(2 * n);
  auto buf = fft.time_buffer();
  std::copy(s.values.begin(), s.values.end(), buf.begin());
  std::reverse_copy(s.values.begin(), s.values.end(), buf.begin() + static_cast<std::ptrdiff_t>(n));
  fft.forward();
  auto spec = fft.spectrum_buffer();
  const double df = 1.0 / (static_cast<double>(2 * n) * s.dt);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    spec[k] *= gain_at_hz(static_cast<double>(k) * df);
  }
  fft.inverse();
  return TimeSeries{s.t0, s.dt, std::vector<double>(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n))};
}

}  // namespace fsstdef
