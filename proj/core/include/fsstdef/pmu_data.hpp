#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fsstdef/time_series.hpp"

namespace fsstdef {

/// Column names of the measurement CSV. Columns not named here (bus
/// frequency, for instance) are accepted and ignored.
struct CsvSchema {
  std::string time = "time_s";
  std::string branch = "branch_id";
  std::string p = "P";
  std::string q = "Q";
  std::string vmag = "Vmag_pu";
  std::string vang = "Vang_rad";
};

/// The four channels of one monitored branch on a shared time axis.
struct BranchMeasurement {
  std::string branch_id;
  TimeSeries p;
  TimeSeries q;
  TimeSeries vmag;
  AngleSeries vang;
  /// Sample indices that had no row in the input (timestamp gaps); they hold
  /// NaN until repair_gaps fills them.
  std::vector<std::size_t> gap_indices;
};

/// Reads the measurement CSV. Rows are partitioned by branch id (in order of
/// first appearance) and sorted by time; dt is the median inter-sample gap.
std::vector<BranchMeasurement> parse_measurements(std::istream& in, const CsvSchema& schema = {});

void write_measurements(std::ostream& out, std::span<const BranchMeasurement> branches,
                        const CsvSchema& schema = {});

/// Wraps an angle into (-pi, pi].
double wrap_angle(double radians) noexcept;

/// Removes 2*pi jumps. Non-finite samples are passed through and skipped when
/// computing increments.
AngleSeries unwrap_angles(const AngleSeries& a);

/// Replaces missing samples and median/MAD outliers by linear interpolation;
/// boundary gaps take the nearest finite value.
TimeSeries repair_gaps(const TimeSeries& s, double outlier_k = 5.0);

/// Unwraps first, then repairs.
AngleSeries repair_gaps(const AngleSeries& a, double outlier_k = 5.0);

/// Unwrap + repair on all channels; checks Vmag > 0 afterwards.
BranchMeasurement preprocess_branch(const BranchMeasurement& b, double outlier_k = 5.0);

}  // namespace fsstdef
