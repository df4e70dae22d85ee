#include "fsstdef/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fsstdef/csv.hpp"
#include "fsstdef/error.hpp"

namespace fsstdef {

namespace {

std::size_t best_bin(const MagnitudeGrid& m, std::size_t t, std::size_t prev, double penalty, double eps) {
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < m.n_freqs(); ++f) {
    const double jump = f > prev ? static_cast<double>(f - prev) : static_cast<double>(prev - f);
    const double cost = -std::log(m.at(f, t) + eps) + penalty * jump;
    if (cost < best_cost) {
      best_cost = cost;
      best = f;
    }
  }
  return best;
}

}  // namespace

MagnitudeGrid magnitude(const TfGrid& g) {
  MagnitudeGrid m;
  m.times = g.times;
  m.freqs = g.freqs;
  m.values.resize(g.coeffs.size());
  std::transform(g.coeffs.begin(), g.coeffs.end(), m.values.begin(), [](const auto& c) { return std::abs(c); });
  return m;
}

double default_clear_halfwidth(double df) noexcept { return std::max(0.05, 3.0 * df); }

Ridge extract_ridge(const MagnitudeGrid& m, double penalty, double validity_rel) {
  if (!(penalty >= 0.0)) fail(ErrorCode::parameter, "ridge penalty must be non-negative");
  if (m.values.size() != m.n_freqs() * m.n_times() || m.values.empty()) {
    fail(ErrorCode::contract_violation, "magnitude matrix does not match its axes");
  }
  const auto peak_it = std::max_element(m.values.begin(), m.values.end());
  const double peak = *peak_it;
  if (!(peak > 0.0)) fail(ErrorCode::no_ridge, "magnitude matrix is identically zero");
  const double eps = 1e-12 * peak;
  const auto peak_index = static_cast<std::size_t>(peak_it - m.values.begin());
  const std::size_t seed_f = peak_index / m.n_times();
  const std::size_t seed_t = peak_index % m.n_times();

  const std::size_t nt = m.n_times();
  Ridge r;
  r.times = m.times;
  r.bin_index.assign(nt, 0);
  r.bin_index[seed_t] = seed_f;
  for (std::size_t t = seed_t + 1; t < nt; ++t) r.bin_index[t] = best_bin(m, t, r.bin_index[t - 1], penalty, eps);
  for (std::size_t t = seed_t; t-- > 0;) r.bin_index[t] = best_bin(m, t, r.bin_index[t + 1], penalty, eps);

  r.freq_hz.resize(nt);
  r.magnitude.resize(nt);
  r.valid.resize(nt);
  double ridge_peak = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    r.freq_hz[t] = m.freqs[r.bin_index[t]];
    r.magnitude[t] = m.at(r.bin_index[t], t);
    ridge_peak = std::max(ridge_peak, r.magnitude[t]);
  }
  r.energy = std::accumulate(r.magnitude.begin(), r.magnitude.end(), 0.0);
  for (std::size_t t = 0; t < nt; ++t) r.valid[t] = r.magnitude[t] >= validity_rel * ridge_peak ? 1 : 0;
  return r;
}

std::vector<Ridge> extract_ridges(const MagnitudeGrid& m, const RidgeParams& params) {
  if (params.n_ridges < 1) fail(ErrorCode::parameter, "n_ridges must be >= 1");
  const double df = m.df();
  const double halfwidth = params.clear_halfwidth_hz > 0.0 ? params.clear_halfwidth_hz : default_clear_halfwidth(df);
  MagnitudeGrid residual = m;
  const double original_max = *std::max_element(m.values.begin(), m.values.end());

  std::vector<Ridge> ridges;
  while (ridges.size() < params.n_ridges) {
    if (!ridges.empty()) {
      const double residual_max = *std::max_element(residual.values.begin(), residual.values.end());
      if (residual_max < params.stop_rel * original_max) break;
    }
    Ridge r = extract_ridge(residual, params.penalty, params.validity_rel);
    for (std::size_t t = 0; t < residual.n_times(); ++t) {
      for (std::size_t f = 0; f < residual.n_freqs(); ++f) {
        if (std::abs(residual.freqs[f] - r.freq_hz[t]) <= halfwidth) residual.at(f, t) = 0.0;
      }
    }
    ridges.push_back(std::move(r));
  }
  std::stable_sort(ridges.begin(), ridges.end(), [](const Ridge& a, const Ridge& b) { return a.energy > b.energy; });
  return ridges;
}

void write_ridges_csv(std::ostream& out, std::span<const Ridge> ridges) {
  out << "time_s,ridge_id,freq_hz,magnitude,valid\n";
  for (std::size_t id = 0; id < ridges.size(); ++id) {
    const auto& r = ridges[id];
    for (std::size_t t = 0; t < r.size(); ++t) {
      out << csv::format_real(r.times[t]) << ',' << id << ',' << csv::format_real(r.freq_hz[t]) << ','
          << csv::format_real(r.magnitude[t]) << ',' << (r.is_valid(t) ? 1 : 0) << '\n';
    }
  }
}

}  // namespace fsstdef
