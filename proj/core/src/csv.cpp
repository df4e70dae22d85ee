#include "fsstdef/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>

namespace fsstdef::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ca = static_cast<char>(a[i] | 0x20);
    const auto cb = static_cast<char>(b[i] | 0x20);
    if (ca != cb) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    auto field = trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
      field = field.substr(1, field.size() - 2);
    }
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_real(std::string_view field) {
  field = trim(field);
  if (field.empty() || iequals(field, "nan") || iequals(field, "-nan")) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "NaN";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_real(std::ostream& os, double v) { os << format_real(v); }

}  // namespace fsstdef::csv
