#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsstdef/pmu_data.hpp"
#include "fsstdef/ridge.hpp"
#include "fsstdef/tfa.hpp"

namespace fsstdef {

enum class Channel { p, q, vmag, vang };

inline constexpr std::array<Channel, 4> all_channels{Channel::p, Channel::q, Channel::vmag, Channel::vang};

std::string_view to_string(Channel c) noexcept;
Channel channel_from_string(std::string_view name);
const TimeSeries& channel_of(const BranchMeasurement& b, Channel c) noexcept;

/// One real oscillatory component, sampled on the FSST time axis.
struct Component {
  TimeSeries signal;
  /// |2 c(t)|, the magnitude of the analytic component.
  std::vector<double> envelope;
  /// 1 = fundamental, 0 = unknown.
  int harmonic = 1;
  std::size_t ridge_id = 0;
  Channel channel = Channel::p;
};

double default_band_halfwidth(double df) noexcept;

/// Band sum c(t) = sum_{|f - r(t)| < d_hz} T(f, t) df; signal = 2 Re c.
/// Zero wherever the ridge is invalid.
Component reconstruct(const TfGrid& t, const Ridge& r, double d_hz);

struct HarmonicLabel {
  int harmonic = 0;
  /// Non-zero when another ridge already took the same harmonic.
  int sub_index = 0;
};

struct HarmonicLabeling {
  /// Aligned with the input ridges.
  std::vector<HarmonicLabel> labels;
  std::vector<std::string> warnings;
};

HarmonicLabeling label_harmonics(std::span<const Ridge> ridges);

struct DecomposeParams {
  double sigma = 2.5;
  TfParams tf;
  RidgeParams ridge;
  /// 0 selects default_band_halfwidth(df).
  double d_hz = 0.0;
  Channel ridge_channel = Channel::p;
};

struct BranchComponents {
  std::string branch_id;
  std::vector<Ridge> ridges;
  HarmonicLabeling labeling;
  /// components[channel][k] belongs to ridges[k].
  std::array<std::vector<Component>, 4> components;
  double d_hz = 0.0;

  const std::vector<Component>& of(Channel c) const noexcept { return components[static_cast<std::size_t>(c)]; }
};

/// Called once per channel with that channel's FSST, before it is released.
using GridObserver = std::function<void(Channel, const TfGrid&)>;

/// Ridges come from the ridge channel only; every channel is reconstructed
/// along those same trajectories so the components stay phase-aligned.
BranchComponents decompose_branch(const BranchMeasurement& b, const DecomposeParams& params,
                                  const GridObserver& observer = {});

/// Columns: time_s, channel, harmonic, value.
void write_components_csv(std::ostream& out, const BranchComponents& bc);

}  // namespace fsstdef
