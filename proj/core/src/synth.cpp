#include "fsstdef/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "fsstdef/error.hpp"
#include "fsstdef/stats.hpp"

namespace fsstdef {

void validate_chirp(const ChirpSpec& spec) {
  if (!(spec.fs > 0.0) || !(spec.duration > 0.0)) fail(ErrorCode::parameter, "chirp needs positive fs and duration");
  if (!(spec.f_start > 0.0 && spec.f_start <= spec.f_end && spec.f_end < 0.5 * spec.fs)) {
    fail(ErrorCode::parameter, "chirp requires 0 < f_start <= f_end < fs/2");
  }
  if (spec.waveform == Waveform::square && !(spec.duty > 0.0 && spec.duty < 1.0)) {
    fail(ErrorCode::parameter, "square duty cycle must lie in (0, 1)");
  }
  if (std::lround(spec.duration * spec.fs) < 2) fail(ErrorCode::parameter, "chirp shorter than two samples");
}

double chirp_phase(const ChirpSpec& spec, double t) noexcept {
  return spec.f_start * t + (spec.f_end - spec.f_start) * t * t / (2.0 * spec.duration);
}

double chirp_frequency(const ChirpSpec& spec, double t) noexcept {
  return spec.f_start + (spec.f_end - spec.f_start) * t / spec.duration;
}

TimeSeries square_chirp(const ChirpSpec& spec) {
  validate_chirp(spec);
  const auto n = static_cast<std::size_t>(std::lround(spec.duration * spec.fs));
  TimeSeries s;
  s.dt = 1.0 / spec.fs;
  s.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = chirp_phase(spec, s.time(i));
    if (spec.waveform == Waveform::sine) {
      s.values[i] = spec.amplitude * std::sin(2.0 * std::numbers::pi * phi);
    } else {
      const double frac = phi - std::floor(phi);
      s.values[i] = frac < spec.duty ? spec.amplitude : -spec.amplitude;
    }
  }
  return s;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t branch, std::uint64_t channel) noexcept {
  // splitmix64 finaliser over the combined key.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ branch) ^ (channel + 0x632be59bd9b4e019ULL));
}

TimeSeries add_noise(const TimeSeries& s, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) return s;
  if (!std::isfinite(snr_db)) fail(ErrorCode::parameter, "snr_db must be finite or +infinity");
  const double var = stats::variance(s.values);
  if (!(var > 0.0)) fail(ErrorCode::parameter, "cannot scale noise to a zero-variance signal");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(var / std::pow(10.0, snr_db / 10.0)));
  TimeSeries out = s;
  for (double& v : out.values) v += normal(rng);
  return out;
}

double closed_form_cycle_def(double a_amp, double a_phase, double b_amp, double b_phase) noexcept {
  return std::numbers::pi * a_amp * b_amp * std::sin(a_phase - b_phase);
}

namespace {

const HarmonicTerm* find_term(const ChannelSpec& c, int h) {
  for (const auto& t : c.terms) {
    if (t.h == h) return &t;
  }
  return nullptr;
}

double branch_cycle_def(const BranchSpec& b, const std::set<int>& harmonics) {
  const auto& p = b.channels[0];
  const auto& q = b.channels[1];
  const auto& vm = b.channels[2];
  const auto& va = b.channels[3];
  double total = 0.0;
  for (int h : harmonics) {
    // A harmonic of order h completes h of its own cycles per fundamental cycle.
    if (const auto* tp = find_term(p, h); tp != nullptr) {
      if (const auto* ta = find_term(va, h); ta != nullptr) {
        total += h * closed_form_cycle_def(tp->amplitude, tp->phase, ta->amplitude, ta->phase);
      }
    }
    if (const auto* tq = find_term(q, h); tq != nullptr) {
      if (const auto* tv = find_term(vm, h); tv != nullptr) {
        total += h * closed_form_cycle_def(tq->amplitude / vm.offset, tq->phase, tv->amplitude, tv->phase);
      }
    }
  }
  return total;
}

}  // namespace

Scenario build_scenario(const ScenarioSpec& spec) {
  validate_chirp(spec.chirp);
  if (spec.branches.empty()) fail(ErrorCode::parameter, "scenario needs at least one branch");
  std::size_t sources = 0;
  std::set<std::string> ids;
  for (const auto& b : spec.branches) {
    if (!ids.insert(b.id).second) fail(ErrorCode::parameter, "duplicate branch id '" + b.id + "'");
    if (b.id == spec.source) ++sources;
    if (!(b.channels[2].offset > 0.0)) fail(ErrorCode::parameter, "voltage baseline must be positive on " + b.id);
    for (const auto& c : b.channels) {
      for (const auto& t : c.terms) {
        if (t.h < 1) fail(ErrorCode::parameter, "harmonic order must be >= 1");
      }
    }
  }
  if (sources != 1) fail(ErrorCode::parameter, "scenario must designate exactly one existing source branch");

  const auto n = static_cast<std::size_t>(std::lround(spec.chirp.duration * spec.chirp.fs));
  const double dt = 1.0 / spec.chirp.fs;
  std::vector<double> phi(n);
  for (std::size_t i = 0; i < n; ++i) phi[i] = chirp_phase(spec.chirp, static_cast<double>(i) * dt);

  std::set<int> harmonics;
  for (const auto& b : spec.branches) {
    for (const auto& c : b.channels) {
      for (const auto& t : c.terms) harmonics.insert(t.h);
    }
  }

  Scenario out;
  out.truth.chirp = spec.chirp;
  out.truth.harmonics.assign(harmonics.begin(), harmonics.end());
  out.truth.source = spec.source;
  out.truth.snr_db = spec.snr_db;
  out.truth.seed = spec.seed;
  for (std::size_t bi = 0; bi < spec.branches.size(); ++bi) {
    const BranchSpec& bs = spec.branches[bi];
    std::array<TimeSeries, 4> ch;
    for (std::size_t c = 0; c < 4; ++c) {
      ch[c].dt = dt;
      ch[c].values.assign(n, bs.channels[c].offset);
      for (const auto& term : bs.channels[c].terms) {
        for (std::size_t i = 0; i < n; ++i) {
          ch[c].values[i] += term.amplitude * std::cos(2.0 * std::numbers::pi * term.h * phi[i] + term.phase);
        }
      }
      if (spec.snr_db && !bs.channels[c].terms.empty()) ch[c] = add_noise(ch[c], *spec.snr_db, derive_seed(spec.seed, bi, c));
    }
    BranchMeasurement m;
    m.branch_id = bs.id;
    m.p = std::move(ch[0]);
    m.q = std::move(ch[1]);
    m.vmag = std::move(ch[2]);
    m.vang = AngleSeries(std::move(ch[3]));
    out.branches.push_back(std::move(m));

    const double per_cycle = branch_cycle_def(bs, harmonics);
    out.truth.branches.push_back({bs.id, per_cycle, (per_cycle > 0.0) - (per_cycle < 0.0)});
  }
  return out;
}

ScenarioSpec default_scenario(const ScenarioOptions& options) {
  if (options.n_branches < 1) fail(ErrorCode::parameter, "scenario needs at least one branch");
  const double quarter = 0.5 * std::numbers::pi;
  ScenarioSpec spec;
  spec.chirp = options.chirp;
  spec.snr_db = options.snr_db;
  spec.seed = options.seed;
  spec.source = "B1";
  for (std::size_t b = 0; b < options.n_branches; ++b) {
    BranchSpec bs;
    bs.id = "B" + std::to_string(b + 1);
    const bool source = b == 0;
    // Sinks share the injected oscillation unevenly and see it reversed.
    const double share = source ? 1.0 : 1.0 / static_cast<double>(b + 1);
    const double lag = source ? -quarter : quarter;
    bs.channels[0].offset = 1.0 + 0.2 * static_cast<double>(b);
    bs.channels[1].offset = 0.2;
    bs.channels[2].offset = 1.0 - 0.01 * static_cast<double>(b);
    bs.channels[3].offset = 0.1 * static_cast<double>(b + 1);
    for (int h : options.harmonics) {
      const double weight = 1.0 / h;
      bs.channels[0].terms.push_back({h, 0.10 * share * weight, 0.0});
      bs.channels[3].terms.push_back({h, 0.02 * weight, lag});
      bs.channels[1].terms.push_back({h, 0.05 * share * weight, 0.0});
      bs.channels[2].terms.push_back({h, 0.005 * weight, lag});
    }
    spec.branches.push_back(std::move(bs));
  }
  return spec;
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  nlohmann::json j;
  j["if_law"] = {{"f_start_hz", truth.chirp.f_start},
                 {"f_end_hz", truth.chirp.f_end},
                 {"duration_s", truth.chirp.duration},
                 {"fs_hz", truth.chirp.fs}};
  j["harmonics"] = truth.harmonics;
  j["source"] = truth.source;
  j["seed"] = truth.seed;
  j["snr_db"] = truth.snr_db ? nlohmann::json(*truth.snr_db) : nlohmann::json(nullptr);
  auto& branches = j["branches"] = nlohmann::json::array();
  for (const auto& b : truth.branches) {
    branches.push_back({{"id", b.id}, {"def_per_cycle", b.def_per_cycle}, {"slope_sign", b.slope_sign}});
  }
  out << j.dump(2) << '\n';
}

}  // namespace fsstdef
