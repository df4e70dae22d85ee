#include "fsstdef/tfa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fsstdef/csv.hpp"
#include "fsstdef/error.hpp"
#include "fsstdef/fft.hpp"

namespace fsstdef {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Windowed FFT of one frame, restricted to the first `n_bins` bins.
class FrameTransform {
 public:
  FrameTransform(const TimeSeries& s, const GaussianWindow& w, std::size_t n_fft, std::size_t n_bins)
      : signal_(s), window_(w), fft_(n_fft), n_bins_(n_bins) {}

  void compute(std::size_t center, Taper taper, std::span<std::complex<double>> out) {
    const auto& tap = taper == Taper::window ? window_.samples : window_.derivative;
    const auto half = static_cast<std::ptrdiff_t>(window_.half_length);
    const auto n_fft = static_cast<std::ptrdiff_t>(fft_.size());
    const auto size = static_cast<std::ptrdiff_t>(signal_.size());
    auto buf = fft_.time_buffer();
    // The r2c plan is out-of-place and preserves its input, so only the
    // window support ever needs rewriting.
    for (std::ptrdiff_t n = -half; n <= half; ++n) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(center) + n;
      const double x = (idx >= 0 && idx < size) ? signal_.values[static_cast<std::size_t>(idx)] : 0.0;
      buf[static_cast<std::size_t>((n + n_fft) % n_fft)] = x * tap[static_cast<std::size_t>(n + half)];
    }
    fft_.forward();
    const auto spec = fft_.spectrum_buffer();
    for (std::size_t k = 0; k < n_bins_; ++k) out[k] = spec[k] * signal_.dt;
  }

 private:
  const TimeSeries& signal_;
  const GaussianWindow& window_;
  RealFft fft_;
  std::size_t n_bins_;
};

struct GridLayout {
  std::size_t n_fft = 0;
  std::size_t n_bins = 0;
  double df = 0.0;
  std::vector<double> times;
  std::vector<double> freqs;
};

GridLayout make_layout(const TimeSeries& s, const GaussianWindow& w, const TfParams& p, std::size_t n_fft) {
  require_valid(s, "time-frequency analysis");
  if (p.hop < 1) fail(ErrorCode::parameter, "hop must be >= 1");
  if (!(p.gamma_rel > 0.0)) fail(ErrorCode::parameter, "gamma_rel must be positive");
  if (p.max_freq_hz < 0.0) fail(ErrorCode::parameter, "max_freq_hz must be non-negative");
  if (std::abs(w.dt - s.dt) > 1e-9 * s.dt) {
    fail(ErrorCode::contract_violation, "window sample interval differs from the signal's");
  }
  if (!window_fits(s, w)) {
    fail(ErrorCode::parameter, "window (sigma = " + csv::format_real(w.sigma) + " s, " +
                                   std::to_string(w.length()) + " samples) is longer than the signal (" +
                                   std::to_string(s.size()) + " samples)");
  }
  if (n_fft < w.length()) {
    fail(ErrorCode::parameter, "n_freq (" + std::to_string(n_fft) + ") shorter than the window (" +
                                   std::to_string(w.length()) + ")");
  }
  GridLayout g;
  g.n_fft = n_fft;
  g.df = 1.0 / (static_cast<double>(n_fft) * s.dt);
  g.n_bins = n_fft / 2 + 1;
  if (p.max_freq_hz > 0.0) {
    const auto cap = static_cast<std::size_t>(std::floor(p.max_freq_hz / g.df + 1e-9)) + 1;
    g.n_bins = std::clamp<std::size_t>(cap, 2, g.n_bins);
  }
  g.freqs.resize(g.n_bins);
  for (std::size_t k = 0; k < g.n_bins; ++k) g.freqs[k] = static_cast<double>(k) * g.df;
  for (std::size_t i = 0; i < s.size(); i += p.hop) g.times.push_back(s.time(i));
  return g;
}

inline double reassigned_frequency(double eta, std::complex<double> v, std::complex<double> vd) noexcept {
  return eta - std::imag(vd / v) / kTwoPi;
}

/// Target bin for a reassigned frequency, or npos when outside the axis.
inline std::size_t target_bin(double f_bar, double df, double f_top, std::size_t n_bins) noexcept {
  if (!(f_bar >= 0.0) || f_bar > f_top) return std::numeric_limits<std::size_t>::max();
  const auto k = static_cast<std::size_t>(std::llround(f_bar / df));
  return k < n_bins ? k : std::numeric_limits<std::size_t>::max();
}

void check_same_axes(const TfGrid& a, const TfGrid& b) {
  if (a.times != b.times || a.freqs != b.freqs || a.coeffs.size() != b.coeffs.size()) {
    fail(ErrorCode::contract_violation, "time-frequency grids have different axes");
  }
}

double max_magnitude(const TfGrid& g) {
  double m = 0.0;
  for (const auto& c : g.coeffs) m = std::max(m, std::abs(c));
  return m;
}

/// Streams frames through both passes of the synchrosqueezing transform.
/// `on_stft_column` sees every V column (pass 1); `on_fsst_column` every
/// reassigned column (pass 2).
template <typename StftSink, typename FsstSink>
void stream_fsst(const TimeSeries& s, const GaussianWindow& w, const TfParams& p, const GridLayout& layout,
                 StftSink&& on_stft_column, FsstSink&& on_fsst_column) {
  FrameTransform transform(s, w, layout.n_fft, layout.n_bins);
  std::vector<std::complex<double>> v(layout.n_bins);
  std::vector<std::complex<double>> vd(layout.n_bins);
  std::vector<std::complex<double>> t_col(layout.n_bins);

  double vmax = 0.0;
  for (std::size_t j = 0; j < layout.times.size(); ++j) {
    transform.compute(j * p.hop, Taper::window, v);
    for (const auto& c : v) vmax = std::max(vmax, std::abs(c));
    on_stft_column(j, std::span<const std::complex<double>>(v));
  }
  const double threshold = p.gamma_rel * vmax;
  const double f_top = layout.freqs.back();
  for (std::size_t j = 0; j < layout.times.size(); ++j) {
    std::fill(t_col.begin(), t_col.end(), std::complex<double>{});
    if (vmax > 0.0) {
      transform.compute(j * p.hop, Taper::window, v);
      transform.compute(j * p.hop, Taper::derivative, vd);
      for (std::size_t k = 0; k < layout.n_bins; ++k) {
        if (!(std::abs(v[k]) > threshold)) continue;
        const double f_bar = reassigned_frequency(layout.freqs[k], v[k], vd[k]);
        const auto target = target_bin(f_bar, layout.df, f_top, layout.n_bins);
        // Density on the shared grid: sum V d_eta / df with d_eta == df.
        if (target < layout.n_bins) t_col[target] += v[k];
      }
    }
    on_fsst_column(j, std::span<const std::complex<double>>(t_col));
  }
}

}  // namespace

GaussianWindow make_window(double sigma, double dt, double trunc_mult) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorCode::parameter, "sigma must be positive");
  if (!(dt > 0.0)) fail(ErrorCode::parameter, "dt must be positive");
  if (!(trunc_mult >= 4.0)) fail(ErrorCode::parameter, "trunc_mult must be >= 4");
  GaussianWindow w;
  w.sigma = sigma;
  w.dt = dt;
  // Guard against 375.00000000000006 style round-up.
  w.half_length = static_cast<std::size_t>(std::ceil(trunc_mult * sigma / dt * (1.0 - 1e-12)));
  w.bandwidth_rad_s = std::sqrt(2.0 * std::numbers::ln2) / sigma;
  const std::size_t len = w.length();
  w.samples.resize(len);
  w.derivative.resize(len);
  const auto half = static_cast<std::ptrdiff_t>(w.half_length);
  for (std::ptrdiff_t n = -half; n <= half; ++n) {
    const double tau = static_cast<double>(n) * dt;
    const double g = std::exp(-(tau * tau) / (2.0 * sigma * sigma));
    w.samples[static_cast<std::size_t>(n + half)] = g;
    w.derivative[static_cast<std::size_t>(n + half)] = -tau / (sigma * sigma) * g;
  }
  return w;
}

std::size_t resolve_fft_length(const GaussianWindow& w, const TfParams& p) {
  return p.n_freq > 0 ? p.n_freq : next_pow2(8 * w.length());
}

bool window_fits(const TimeSeries& s, const GaussianWindow& w) noexcept { return s.size() > 2 * w.half_length; }

TfGrid stft(const TimeSeries& s, const GaussianWindow& w, const TfParams& p, Taper taper) {
  const auto layout = make_layout(s, w, p, resolve_fft_length(w, p));
  TfGrid g;
  g.times = layout.times;
  g.freqs = layout.freqs;
  g.coeffs.assign(layout.n_bins * layout.times.size(), {});
  FrameTransform transform(s, w, layout.n_fft, layout.n_bins);
  std::vector<std::complex<double>> col(layout.n_bins);
  for (std::size_t j = 0; j < g.n_times(); ++j) {
    transform.compute(j * p.hop, taper, col);
    for (std::size_t k = 0; k < layout.n_bins; ++k) g.at(k, j) = col[k];
  }
  return g;
}

IfMap if_estimate(const TfGrid& v, const TfGrid& vd, double gamma_rel) {
  check_same_axes(v, vd);
  if (!(gamma_rel > 0.0)) fail(ErrorCode::parameter, "gamma_rel must be positive");
  IfMap m;
  m.n_freqs = v.n_freqs();
  m.n_times = v.n_times();
  m.values.assign(v.coeffs.size(), 0.0);
  m.valid.assign(v.coeffs.size(), 0);
  const double threshold = gamma_rel * max_magnitude(v);
  for (std::size_t f = 0; f < m.n_freqs; ++f) {
    for (std::size_t t = 0; t < m.n_times; ++t) {
      const std::size_t i = f * m.n_times + t;
      if (!(std::abs(v.coeffs[i]) > threshold)) continue;
      m.values[i] = reassigned_frequency(v.freqs[f], v.coeffs[i], vd.coeffs[i]);
      m.valid[i] = std::isfinite(m.values[i]) ? 1 : 0;
    }
  }
  return m;
}

TfGrid synchrosqueeze(const TfGrid& v, const IfMap& if_map) {
  if (if_map.n_freqs != v.n_freqs() || if_map.n_times != v.n_times()) {
    fail(ErrorCode::contract_violation, "IF map shape differs from the STFT grid");
  }
  TfGrid out;
  out.times = v.times;
  out.freqs = v.freqs;
  out.coeffs.assign(v.coeffs.size(), {});
  if (v.n_freqs() < 2) return out;
  const double df = v.df();
  const double f_top = v.freqs.back();
  for (std::size_t t = 0; t < v.n_times(); ++t) {
    for (std::size_t f = 0; f < v.n_freqs(); ++f) {
      if (!if_map.is_valid(f, t)) continue;
      const auto target = target_bin(if_map.value(f, t), df, f_top, v.n_freqs());
      if (target < v.n_freqs()) out.at(target, t) += v.at(f, t);
    }
  }
  return out;
}

TfGrid fsst(const TimeSeries& s, const GaussianWindow& w, const TfParams& p) {
  const auto layout = make_layout(s, w, p, resolve_fft_length(w, p));
  TfGrid out;
  out.times = layout.times;
  out.freqs = layout.freqs;
  out.coeffs.assign(layout.n_bins * layout.times.size(), {});
  const std::size_t nt = layout.times.size();
  stream_fsst(
      s, w, p, layout, [](std::size_t, std::span<const std::complex<double>>) {},
      [&](std::size_t j, std::span<const std::complex<double>> col) {
        for (std::size_t k = 0; k < col.size(); ++k) out.coeffs[k * nt + j] = col[k];
      });
  return out;
}

double RenyiAccumulator::entropy() const {
  if (empty()) fail(ErrorCode::undefined_entropy, "time-frequency grid is identically zero");
  return -0.5 * std::log2(sum3_ / sum1_);
}

double renyi_entropy(const TfGrid& g) {
  RenyiAccumulator acc;
  for (const auto& c : g.coeffs) acc.add(std::abs(c));
  return acc.entropy();
}

SigmaSelection select_sigma(const TimeSeries& s, std::span<const double> sigma_grid, const TfParams& p) {
  require_valid(s, "select_sigma");
  if (sigma_grid.empty()) fail(ErrorCode::parameter, "sigma grid is empty");
  SigmaSelection out;
  std::vector<GaussianWindow> windows;
  std::size_t longest = 0;
  for (double sigma : sigma_grid) {
    if (!(sigma > 0.0)) fail(ErrorCode::parameter, "sigma grid values must be positive");
    windows.push_back(make_window(sigma, s.dt, p.trunc_mult));
    if (window_fits(s, windows.back())) longest = std::max(longest, windows.back().length());
  }
  if (longest == 0) fail(ErrorCode::parameter, "no sigma in the grid fits the signal");
  out.fft_length = p.n_freq > 0 ? p.n_freq : next_pow2(8 * longest);

  bool have_best = false;
  double best_entropy = 0.0;
  for (const auto& w : windows) {
    SigmaPoint point;
    point.sigma = w.sigma;
    if (!window_fits(s, w) || out.fft_length < w.length()) {
      out.warnings.push_back("sigma = " + csv::format_real(w.sigma) + " s skipped: window longer than the signal");
      out.curve.push_back(point);
      continue;
    }
    TfParams local = p;
    local.n_freq = out.fft_length;
    const auto layout = make_layout(s, w, local, out.fft_length);
    RenyiAccumulator stft_acc;
    RenyiAccumulator fsst_acc;
    stream_fsst(
        s, w, local, layout,
        [&](std::size_t, std::span<const std::complex<double>> col) {
          for (const auto& c : col) stft_acc.add(std::abs(c));
        },
        [&](std::size_t, std::span<const std::complex<double>> col) {
          for (const auto& c : col) fsst_acc.add(std::abs(c));
        });
    point.feasible = true;
    point.stft_entropy = stft_acc.entropy();
    point.fsst_entropy = fsst_acc.entropy();
    out.curve.push_back(point);
    const bool better = !have_best || point.fsst_entropy < best_entropy ||
                        (point.fsst_entropy == best_entropy && point.sigma < out.sigma);
    if (better) {
      have_best = true;
      best_entropy = point.fsst_entropy;
      out.sigma = point.sigma;
    }
  }
  return out;
}

std::vector<double> default_sigma_grid() { return {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0, 10.0}; }

void write_tf_csv(std::ostream& out, const TfGrid& g, TfField field) {
  out << "time_s\\freq_hz";
  for (double f : g.freqs) out << ',' << csv::format_real(f);
  out << '\n';
  for (std::size_t t = 0; t < g.n_times(); ++t) {
    out << csv::format_real(g.times[t]);
    for (std::size_t f = 0; f < g.n_freqs(); ++f) {
      const auto c = g.at(f, t);
      out << ',' << csv::format_real(field == TfField::magnitude ? std::abs(c) : std::arg(c));
    }
    out << '\n';
  }
}

}  // namespace fsstdef
