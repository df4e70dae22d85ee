#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fsstdef::csv {

/// Splits one CSV record on commas. Surrounding whitespace and a single pair
/// of double quotes around a field are stripped; embedded commas are not
/// supported.
std::vector<std::string_view> split(std::string_view line);

/// Parses a real field. Empty fields and NaN spellings yield quiet NaN;
/// anything else unparsable yields nullopt.
std::optional<double> parse_real(std::string_view field);

/// Shortest text that parses back to exactly `v` ("NaN" for NaN).
std::string format_real(double v);

void write_real(std::ostream& os, double v);

}  // namespace fsstdef::csv
