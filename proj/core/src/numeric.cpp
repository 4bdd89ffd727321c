#include "strainmix/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#if defined(__GLIBC__)
#include <math.h>
#endif

namespace strainmix {

double log_gamma(double x) noexcept {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

double log_sum_exp(std::span<const double> values) noexcept {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(top)) return top;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - top);
    return top + std::log(acc);
}

double sorted_quantile(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (prob <= 0.0) return sorted.front();
    if (prob >= 1.0) return sorted.back();
    const double h = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval equal_tailed_interval(std::vector<double> values, double mass) {
    std::sort(values.begin(), values.end());
    const double tail = 0.5 * (1.0 - mass);
    return {sorted_quantile(values, tail), sorted_quantile(values, 0.5),
            sorted_quantile(values, 1.0 - tail)};
}

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    // Shortest text that reads back to the same double.
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace strainmix
