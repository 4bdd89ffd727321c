#pragma once
// Reference computations that share no code with the library's log-space path.

#include <cmath>
#include <cstdint>
#include <vector>

namespace strainmix::oracle {

/// Beta-binomial probability by direct products in extended precision:
/// C(T, n) * prod_{i<n}(a+i) * prod_{i<r}(b+i) / prod_{i<T}(nu+i).
inline long double beta_binomial_pmf(std::uint32_t ref, std::uint32_t nonref, long double q,
                                     long double nu) {
    const long double a = q * nu;
    const long double b = (1.0L - q) * nu;
    const std::uint32_t total = ref + nonref;
    long double value = 1.0L;
    // Interleave factors to stay well inside the long double range.
    std::uint32_t i_choose = 0, i_a = 0, i_b = 0, i_t = 0;
    while (i_choose < nonref || i_a < nonref || i_b < ref || i_t < total) {
        if (i_choose < nonref) {
            value *= static_cast<long double>(total - i_choose) / (i_choose + 1);
            ++i_choose;
        }
        if (i_a < nonref) value *= a + i_a++;
        if (i_b < ref) value *= b + i_b++;
        if (i_t < total) value /= nu + i_t++;
    }
    return value;
}

inline long double clamp(long double q) {
    constexpr long double eps = 1e-6L;
    return q < eps ? eps : (q > 1.0L - eps ? 1.0L - eps : q);
}

/// Naive mixture over all 2^k bands in probability space; weights used in the
/// order given.
inline long double snp_likelihood(std::uint32_t ref, std::uint32_t nonref,
                                  const std::vector<double>& weights, double alpha, double nu,
                                  double p) {
    const int k = static_cast<int>(weights.size());
    long double total = 0.0L;
    for (std::uint32_t mask = 0; mask < (1U << k); ++mask) {
        long double mass = 0.0L;
        int carriers = 0;
        for (int i = 0; i < k; ++i) {
            if (mask >> i & 1U) {
                mass += weights[static_cast<std::size_t>(i)];
                ++carriers;
            }
        }
        if (mass > 1.0L) mass = 1.0L;
        const long double q = clamp((1.0L - alpha) * mass + alpha * static_cast<long double>(p));
        const long double lambda = std::pow(static_cast<long double>(p), carriers) *
                                   std::pow(1.0L - p, k - carriers);
        total += lambda * beta_binomial_pmf(ref, nonref, q, nu);
    }
    return total;
}

}  // namespace strainmix::oracle
