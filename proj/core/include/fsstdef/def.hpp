#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fsstdef/components.hpp"
#include "fsstdef/time_series.hpp"

namespace fsstdef {

/// Cumulative dissipating energy of one branch and one harmonic (or band).
struct DefSeries {
  std::string branch_id;
  int harmonic = 1;
  std::size_t ridge_id = 0;
  std::vector<double> t;
  std::vector<double> w;
  std::size_t onset_index = 0;

  std::size_t size() const noexcept { return t.size(); }
};

/// W = 0 up to `onset`, then
/// W[k+1] = W[k] + dP[k] (dTheta[k+1] - dTheta[k]) + dQ[k] / V[k] (dV[k+1] - dV[k]).
/// `v` is the voltage magnitude without detrending.
DefSeries def_series(const TimeSeries& dp, const TimeSeries& dtheta, const TimeSeries& dq, const TimeSeries& dv,
                     const TimeSeries& v, std::size_t onset);

struct OnsetParams {
  double k_mad = 3.0;
  /// Length of the noise-only reference at the start; 0 means 10% of the record.
  double baseline_span_s = 0.0;
};

struct Onset {
  std::size_t index = 0;
  std::optional<std::string> warning;
};

/// First sample where the envelope rises above the baseline noise level
/// (median + k_mad * 1.4826 * MAD over the baseline span). A record whose
/// baseline median is already half the envelope maximum is active from 0.
Onset detect_onset(std::span<const double> envelope, double dt, const OnsetParams& params = {});

/// Uses the envelope of the first fundamental (h = 1) component, else the first one.
Onset detect_onset(std::span<const Component> components, const OnsetParams& params = {});

struct FitSpan {
  /// nullopt fits everything after the onset.
  std::optional<double> trailing_s;
};

struct SlopeFit {
  double slope = 0.0;
  /// Coefficient of determination; 0 when W is flat over the span.
  double r_squared = 0.0;
};

SlopeFit def_slope(const DefSeries& w, const FitSpan& span = {});

struct SourceEntry {
  std::string branch_id;
  int harmonic = 1;
  std::size_t ridge_id = 0;
  double slope = 0.0;
  double confidence = 0.0;
};

struct BranchAggregate {
  std::string branch_id;
  double slope = 0.0;
};

struct SourceReport {
  /// Sorted by slope, highest first.
  std::vector<SourceEntry> entries;
  /// Sum of harmonic slopes per branch, highest first.
  std::vector<BranchAggregate> branches;
  /// Branch with the largest positive aggregate slope, if any.
  std::optional<std::string> verdict;
};

inline constexpr const char* no_source_message = "no source identified among monitored branches";

SourceReport rank_sources(std::span<const DefSeries> series, const FitSpan& span = {});

/// Columns: time_s, branch_id, harmonic, W.
void write_def_csv(std::ostream& out, std::span<const DefSeries> series);

}  // namespace fsstdef
