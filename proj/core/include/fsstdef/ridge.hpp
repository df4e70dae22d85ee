#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "fsstdef/tfa.hpp"

namespace fsstdef {

/// Non-negative real matrix with time/frequency axes, frequency-major.
struct MagnitudeGrid {
  std::vector<double> times;
  std::vector<double> freqs;
  std::vector<double> values;

  std::size_t n_freqs() const noexcept { return freqs.size(); }
  std::size_t n_times() const noexcept { return times.size(); }
  double& at(std::size_t f, std::size_t t) noexcept { return values[f * times.size() + t]; }
  double at(std::size_t f, std::size_t t) const noexcept { return values[f * times.size() + t]; }
  double df() const noexcept { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

MagnitudeGrid magnitude(const TfGrid& g);

/// Instantaneous-frequency trajectory, one entry per grid time.
struct Ridge {
  std::vector<double> times;
  std::vector<double> freq_hz;
  std::vector<std::size_t> bin_index;
  /// Matrix value under the ridge at extraction time.
  std::vector<double> magnitude;
  /// False where the ridge is weaker than `validity_rel` of its own peak.
  std::vector<unsigned char> valid;
  /// Sum of magnitude along the whole trajectory.
  double energy = 0.0;

  std::size_t size() const noexcept { return times.size(); }
  bool is_valid(std::size_t t) const noexcept { return valid[t] != 0; }
};

struct RidgeParams {
  std::size_t n_ridges = 4;
  /// Cost per bin of frequency jump between consecutive times.
  double penalty = 2.0;
  /// Half-width of the band cleared around each extracted ridge; 0 selects
  /// max(0.05 Hz, 3 df).
  double clear_halfwidth_hz = 0.0;
  double validity_rel = 0.05;
  /// Stop once the residual maximum drops below this fraction of the original.
  double stop_rel = 0.01;
};

double default_clear_halfwidth(double df) noexcept;

/// Penalised forward-backward greedy search seeded at the global maximum.
/// Each step picks the bin minimising -ln(M + eps) + penalty * |jump|, with
/// eps = 1e-12 * max(M).
Ridge extract_ridge(const MagnitudeGrid& m, double penalty, double validity_rel = 0.05);

/// Repeated extract_ridge, zeroing +-clear_halfwidth_hz around each ridge.
/// Ridges come back sorted by energy, highest first.
std::vector<Ridge> extract_ridges(const MagnitudeGrid& m, const RidgeParams& params);

/// Columns: time_s, ridge_id, freq_hz, magnitude, valid.
void write_ridges_csv(std::ostream& out, std::span<const Ridge> ridges);

}  // namespace fsstdef
