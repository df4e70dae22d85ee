#include "fsstdef/pmu_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string_view>
#include <unordered_map>

#include "fsstdef/csv.hpp"
#include "fsstdef/error.hpp"
#include "fsstdef/stats.hpp"

namespace fsstdef {

namespace {

constexpr double kJitterTolerance = 0.01;
constexpr int kMaxRepairPasses = 50;

struct Row {
  double time;
  std::size_t line;
  double p, q, vmag, vang;
};

std::size_t column_index(const std::vector<std::string_view>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

// Sample rate snapped to micro-hertz so re-parsing serialized output infers
// exactly the same dt.
double infer_dt(std::vector<double> gaps) {
  const double gap = stats::median(std::move(gaps));
  const double fs = std::round(1e6 / gap) / 1e6;
  return fs > 0.0 ? 1.0 / fs : gap;
}

BranchMeasurement assemble(const std::string& id, std::vector<Row> rows) {
  if (rows.size() < 2) {
    fail(ErrorCode::insufficient_data, "branch '" + id + "' has fewer than 2 samples");
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
  std::vector<double> gaps;
  gaps.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double gap = rows[i].time - rows[i - 1].time;
    if (!(gap > 0.0)) {
      fail(ErrorCode::format, "line " + std::to_string(rows[i].line) + ": duplicate timestamp for branch '" + id + "'");
    }
    gaps.push_back(gap);
  }
  const double dt = infer_dt(std::move(gaps));
  const double t0 = rows.front().time;

  std::vector<std::size_t> index(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double pos = (rows[i].time - t0) / dt;
    const auto k = static_cast<long long>(std::llround(pos));
    const double jitter = std::abs(rows[i].time - (t0 + static_cast<double>(k) * dt));
    if (jitter > kJitterTolerance * dt) {
      fail(ErrorCode::format, "line " + std::to_string(rows[i].line) + ": timestamp deviates from the uniform grid by " +
                                  csv::format_real(jitter / dt * 100.0) + "% of dt");
    }
    index[i] = static_cast<std::size_t>(k);
    if (i > 0 && index[i] == index[i - 1]) {
      fail(ErrorCode::format, "line " + std::to_string(rows[i].line) + ": two rows map to the same sample");
    }
  }

  const std::size_t n = index.back() + 1;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  BranchMeasurement b;
  b.branch_id = id;
  for (TimeSeries* ch : {&b.p, &b.q, &b.vmag, static_cast<TimeSeries*>(&b.vang)}) {
    ch->t0 = t0;
    ch->dt = dt;
    ch->values.assign(n, nan);
  }
  std::vector<bool> present(n, false);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto k = index[i];
    present[k] = true;
    b.p.values[k] = rows[i].p;
    b.q.values[k] = rows[i].q;
    b.vmag.values[k] = rows[i].vmag;
    b.vang.values[k] = rows[i].vang;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!present[k]) b.gap_indices.push_back(k);
  }
  return b;
}

void interpolate_missing(std::vector<double>& v, const std::vector<bool>& missing) {
  const std::size_t n = v.size();
  std::optional<std::size_t> prev;
  std::size_t i = 0;
  while (i < n) {
    if (!missing[i]) {
      prev = i;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && missing[j]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (!prev && j == n) break;  // no anchor at all; caller guarantees this cannot happen
      if (!prev) {
        v[k] = v[j];
      } else if (j == n) {
        v[k] = v[*prev];
      } else {
        const double w = static_cast<double>(k - *prev) / static_cast<double>(j - *prev);
        v[k] = v[*prev] + w * (v[j] - v[*prev]);
      }
    }
    i = j;
  }
}

}  // namespace

std::vector<BranchMeasurement> parse_measurements(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos) {
    throw ParseError(std::max<std::size_t>(line_no, 1), "empty input: header row required");
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const std::string header_line = line;
  const auto header = csv::split(header_line);
  const std::size_t c_time = column_index(header, schema.time);
  const std::size_t c_branch = column_index(header, schema.branch);
  const std::size_t c_p = column_index(header, schema.p);
  const std::size_t c_q = column_index(header, schema.q);
  const std::size_t c_vm = column_index(header, schema.vmag);
  const std::size_t c_va = column_index(header, schema.vang);

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    const auto field_value = [&](std::size_t c) {
      const auto v = csv::parse_real(fields[c]);
      if (!v) throw ParseError(line_no, "column '" + std::string(header[c]) + "' is not a number");
      return *v;
    };
    Row r{};
    r.line = line_no;
    r.time = field_value(c_time);
    if (!std::isfinite(r.time)) throw ParseError(line_no, "timestamp missing or not finite");
    const std::string id(fields[c_branch]);
    if (id.empty()) throw ParseError(line_no, "empty branch id");
    r.p = field_value(c_p);
    r.q = field_value(c_q);
    r.vmag = field_value(c_vm);
    r.vang = field_value(c_va);
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(r);
  }
  if (order.empty()) fail(ErrorCode::insufficient_data, "no data rows");

  std::vector<BranchMeasurement> out;
  out.reserve(order.size());
  for (const auto& id : order) out.push_back(assemble(id, std::move(rows[id])));
  return out;
}

void write_measurements(std::ostream& out, std::span<const BranchMeasurement> branches, const CsvSchema& schema) {
  out << schema.time << ',' << schema.branch << ',' << schema.p << ',' << schema.q << ',' << schema.vmag << ','
      << schema.vang << '\n';
  std::size_t longest = 0;
  for (const auto& b : branches) longest = std::max(longest, b.p.size());
  for (std::size_t i = 0; i < longest; ++i) {
    for (const auto& b : branches) {
      if (i >= b.p.size()) continue;
      // Gap samples were absent from the source; keep them absent.
      if (std::binary_search(b.gap_indices.begin(), b.gap_indices.end(), i)) continue;
      out << csv::format_real(b.p.time(i)) << ',' << b.branch_id << ',' << csv::format_real(b.p.values[i]) << ','
          << csv::format_real(b.q.values[i]) << ',' << csv::format_real(b.vmag.values[i]) << ','
          << csv::format_real(b.vang.values[i]) << '\n';
    }
  }
}

double wrap_angle(double radians) noexcept {
  double r = std::remainder(radians, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

AngleSeries unwrap_angles(const AngleSeries& a) {
  AngleSeries out = a;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double turns = 0.0;
  std::optional<double> prev;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.values[i];
    if (!std::isfinite(x)) continue;
    if (prev) {
      const double d = x - *prev;
      turns += std::round((wrap_angle(d) - d) / two_pi);
    }
    out.values[i] = x + two_pi * turns;
    prev = x;
  }
  return out;
}

TimeSeries repair_gaps(const TimeSeries& s, double outlier_k) {
  if (!(outlier_k > 0.0)) fail(ErrorCode::parameter, "outlier_k must be positive");
  std::vector<double> v = s.values;
  std::vector<bool> missing(v.size());
  std::size_t finite = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    missing[i] = !std::isfinite(v[i]);
    if (!missing[i]) ++finite;
  }
  if (finite == 0) fail(ErrorCode::unrecoverable_data, "series has no finite samples");

  // Repeat until no sample is flagged, so a repaired series is a fixed point.
  for (int pass = 0; pass < kMaxRepairPasses; ++pass) {
    std::vector<double> kept;
    kept.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!missing[i]) kept.push_back(v[i]);
    }
    const double med = stats::median(kept);
    const double mad = stats::mad(kept);
    bool flagged = false;
    if (mad > 0.0) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!missing[i] && std::abs(v[i] - med) > outlier_k * mad) {
          missing[i] = true;
          flagged = true;
        }
      }
    }
    const bool any_missing = std::find(missing.begin(), missing.end(), true) != missing.end();
    if (!any_missing) break;
    interpolate_missing(v, missing);
    std::fill(missing.begin(), missing.end(), false);
    if (!flagged && pass > 0) break;
  }
  return TimeSeries{s.t0, s.dt, std::move(v)};
}

AngleSeries repair_gaps(const AngleSeries& a, double outlier_k) {
  const AngleSeries unwrapped = unwrap_angles(a);
  return AngleSeries(repair_gaps(static_cast<const TimeSeries&>(unwrapped), outlier_k));
}

BranchMeasurement preprocess_branch(const BranchMeasurement& b, double outlier_k) {
  BranchMeasurement out;
  out.branch_id = b.branch_id;
  out.gap_indices = b.gap_indices;
  out.p = repair_gaps(b.p, outlier_k);
  out.q = repair_gaps(b.q, outlier_k);
  out.vmag = repair_gaps(b.vmag, outlier_k);
  out.vang = repair_gaps(b.vang, outlier_k);
  for (double v : out.vmag.values) {
    if (!(v > 0.0)) fail(ErrorCode::data, "branch '" + b.branch_id + "': voltage magnitude must stay positive");
  }
  return out;
}

}  // namespace fsstdef
