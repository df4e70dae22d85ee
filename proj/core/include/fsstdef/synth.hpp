#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fsstdef/pmu_data.hpp"

namespace fsstdef {

enum class Waveform { square, sine };

/// Linear chirp with instantaneous frequency f_start + (f_end - f_start) t / duration.
struct ChirpSpec {
  double f_start = 0.1;
  double f_end = 0.3;
  double duration = 100.0;
  double fs = 30.0;
  double amplitude = 1.0;
  Waveform waveform = Waveform::square;
  double duty = 0.5;
};

void validate_chirp(const ChirpSpec& spec);

/// Cycles elapsed at time t.
double chirp_phase(const ChirpSpec& spec, double t) noexcept;
double chirp_frequency(const ChirpSpec& spec, double t) noexcept;

/// round(duration * fs) samples starting at t = 0.
TimeSeries square_chirp(const ChirpSpec& spec);

inline constexpr double no_noise = std::numeric_limits<double>::infinity();

/// s + white Gaussian noise with variance Var(s) / 10^(snr_db / 10).
TimeSeries add_noise(const TimeSeries& s, double snr_db, std::uint64_t seed);

/// Independent stream seed for one (branch, channel) pair.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t branch, std::uint64_t channel) noexcept;

/// amplitude * cos(2 pi h phi(t) + phase) on the shared chirp phase phi.
struct HarmonicTerm {
  int h = 1;
  double amplitude = 0.0;
  double phase = 0.0;
};

struct ChannelSpec {
  double offset = 0.0;
  std::vector<HarmonicTerm> terms;
};

struct BranchSpec {
  std::string id;
  /// P, Q, Vmag, Vang.
  std::array<ChannelSpec, 4> channels;
};

struct ScenarioSpec {
  ChirpSpec chirp;
  std::vector<BranchSpec> branches;
  std::string source;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
};

struct BranchTruth {
  std::string id;
  /// Closed-form DEF gain over one fundamental cycle.
  double def_per_cycle = 0.0;
  int slope_sign = 0;
};

struct GroundTruth {
  ChirpSpec chirp;
  std::vector<int> harmonics;
  std::string source;
  std::vector<BranchTruth> branches;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
};

struct Scenario {
  std::vector<BranchMeasurement> branches;
  GroundTruth truth;
};

/// Per-cycle integral of A cos(psi + a) d[B cos(psi + b)] = pi A B sin(a - b).
double closed_form_cycle_def(double a_amp, double a_phase, double b_amp, double b_phase) noexcept;

Scenario build_scenario(const ScenarioSpec& spec);

struct ScenarioOptions {
  std::size_t n_branches = 3;
  std::vector<int> harmonics{1, 3, 5, 7};
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  ChirpSpec chirp;
};

/// Square-wave-like forced oscillation (amplitudes 1/h) seen on n branches.
/// Branch "B1" injects energy (dP leads dTheta by pi/2); the others absorb it.
ScenarioSpec default_scenario(const ScenarioOptions& options = {});

void write_ground_truth(std::ostream& out, const GroundTruth& truth);

}  // namespace fsstdef
