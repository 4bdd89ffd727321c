#include "strainmix/random.hpp"

#include <cmath>
#include <stdexcept>

namespace strainmix {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t a,
                          std::uint64_t b) noexcept {
    std::uint64_t h = splitmix64(fnv1a64(label));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b * 0xd6e8feb86659fd93ULL));
    return base ^ h;
}

double sample_uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double sample_exponential(Rng& rng, double mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("exponential mean must be positive");
    return std::exponential_distribution<double>(1.0 / mean)(rng);
}

std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> concentration) {
    std::vector<double> out(concentration.size());
    for (;;) {
        double sum = 0.0;
        bool degenerate = false;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = std::gamma_distribution<double>(concentration[i], 1.0)(rng);
            degenerate |= !(out[i] > 0.0);
            sum += out[i];
        }
        if (degenerate || !(sum > 0.0)) continue;
        for (double& x : out) x /= sum;
        return out;
    }
}

std::uint32_t sample_beta_binomial(Rng& rng, std::uint32_t total, double q, double nu) {
    if (total == 0) return 0;
    const double a = q * nu;
    const double b = (1.0 - q) * nu;
    const double ga = std::gamma_distribution<double>(a, 1.0)(rng);
    const double gb = std::gamma_distribution<double>(b, 1.0)(rng);
    double x = 0.0;
    if (ga + gb > 0.0) {
        x = ga / (ga + gb);
    } else {
        // Both variates underflowed; the beta draw sits at an endpoint with odds a : b.
        x = sample_uniform(rng) < a / (a + b) ? 1.0 : 0.0;
    }
    return static_cast<std::uint32_t>(
        std::binomial_distribution<std::uint32_t>(total, x)(rng));
}

}  // namespace strainmix
