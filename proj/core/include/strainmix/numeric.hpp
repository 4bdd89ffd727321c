#pragma once

#include <span>
#include <string>
#include <vector>

namespace strainmix {

/// Reentrant log|Gamma(x)|; std::lgamma writes the global signgam on glibc.
double log_gamma(double x) noexcept;

/// log(sum(exp(v))) with max-shift. Returns -inf for an empty span.
double log_sum_exp(std::span<const double> values) noexcept;

/// Linear-interpolated quantile (type 7) of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double prob);

/// Median and equal-tailed interval of an unsorted sample.
struct Interval {
    double lo = 0.0;
    double median = 0.0;
    double hi = 0.0;
};
Interval equal_tailed_interval(std::vector<double> values, double mass = 0.95);

/// Round-trip decimal text for CSV output; "NA" for NaN.
std::string format_number(double v);

}  // namespace strainmix
