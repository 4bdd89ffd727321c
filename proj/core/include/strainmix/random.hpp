#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace strainmix {

/// All sampling goes through one engine type so a seed pins a stream exactly.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Independent stream seed for a named sub-task, e.g. (sample id, K, restriction)
/// or (cell index, replicate). Mixing is stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t a = 0,
                          std::uint64_t b = 0) noexcept;

double sample_uniform(Rng& rng);
double sample_exponential(Rng& rng, double mean);

/// Dirichlet draw via normalized gamma variates; entries are strictly positive.
std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> concentration);

/// Beta-binomial draw: x ~ Beta(q nu, (1 - q) nu), then Binomial(total, x).
std::uint32_t sample_beta_binomial(Rng& rng, std::uint32_t total, double q, double nu);

}  // namespace strainmix
