#pragma once

#include <span>
#include <vector>

namespace fsstdef::stats {

double mean(std::span<const double> x);
/// Population variance (divides by n).
double variance(std::span<const double> x);
double rms(std::span<const double> x);
double median(std::vector<double> x);
/// Median absolute deviation from the median (unscaled).
double mad(std::span<const double> x);
double max_abs(std::span<const double> x);
/// Sum of |x[i+1] - x[i]|.
double total_variation(std::span<const double> x);

}  // namespace fsstdef::stats
