#pragma once
// Metropolis-Hastings sampling of (alpha, W, nu) for one sample at fixed K.
//
// Every block is proposed independently from its prior. For such proposals
// the prior and proposal densities cancel in the acceptance ratio, leaving
// min(1, L(proposed) / L(current)).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "strainmix/model.hpp"
#include "strainmix/numeric.hpp"
#include "strainmix/random.hpp"

namespace strainmix {

/// Which parameters a fit leaves free.
///   full:       alpha, W and nu
///   alpha_zero: alpha pinned at kAlphaZeroValue, W and nu free
///   k_one:      K = 1, alpha and nu free
enum class Restriction { full, alpha_zero, k_one };

/// Stand-in for alpha = 0 in the restricted fit; exactly zero puts the
/// boundary bands on the clamp.
inline constexpr double kAlphaZeroValue = 0.001;

std::string_view to_string(Restriction r) noexcept;
Restriction parse_restriction(std::string_view name);

struct PriorSpec {
    double dirichlet_concentration = 1.0;  ///< symmetric; W | K ~ Dirichlet(c * 1_K)
    double nu_mean = 5.0;                  ///< nu ~ Exponential with this mean
    double k_poisson_rate = 2.0;           ///< K ~ zero-truncated Poisson(rate)
    // alpha ~ Uniform(0, 1); not configurable.

    void validate() const;
    std::vector<double> concentration(int k) const;

    /// log P(K = k) under the zero-truncated Poisson prior.
    double log_k_prior(int k) const;
};

struct McmcConfig {
    std::size_t n_iterations = 10000;
    std::size_t burn_in = 2000;
    std::size_t thin = 5;
    std::uint64_t seed = 0;
    /// Fixed lower bound on nu; proposals below it are rejected. Below 1 every
    /// band is U-shaped and alpha stops being identifiable.
    std::optional<double> nu_lower_bound = 1.0;
    /// Reject states whose nu would make an interior band's beta density bimodal.
    bool nu_unimodal = false;
    /// Finite prior draws scored at start-up; the chain starts from the best one.
    int init_candidates = 32;

    void validate() const;
    std::size_t expected_draws() const noexcept;
};

struct AcceptanceRates {
    std::optional<double> alpha;
    std::optional<double> weights;
    std::optional<double> nu;
};

struct Draw {
    std::size_t iteration = 0;
    ModelParams params;
    double log_likelihood = 0.0;
};

struct PosteriorChain {
    int k = 1;
    Restriction restriction = Restriction::full;
    McmcConfig config;
    std::vector<Draw> draws;  ///< post burn-in, thinned
    AcceptanceRates acceptance;
};

struct PosteriorSummary {
    ModelParams map_params;  ///< highest-likelihood stored draw
    double max_log_likelihood = 0.0;
    Interval alpha;
    std::vector<Interval> weights;  ///< per canonical weight slot
    Interval nu;
};

/// Minimum nu for which every band other than the empty and full subsets has
/// both beta shapes above one, evaluated at p = 0.5. Zero when K = 1.
double nu_unimodal_bound(const ModelParams& params);

/// Metropolis acceptance for an independence proposal drawn from the prior.
bool accept_independence_proposal(double current_log_lik, double proposed_log_lik, Rng& rng);

/// Draw a canonical parameter state from the priors under a restriction.
ModelParams sample_prior(int k, Restriction restriction, const PriorSpec& priors, Rng& rng);

/// Runs one chain. The RNG stream is derived from (cfg.seed, sample id, k,
/// restriction), so a seed reproduces the draw sequence exactly.
/// Throws InferenceError if no finite initial state is found in 100 prior draws.
PosteriorChain run_chain(const SampleData& data, const Plaf& plaf, int k,
                         const PriorSpec& priors, const McmcConfig& cfg,
                         Restriction restriction = Restriction::full);

/// Same as above with a prepared likelihood, for callers fitting many models.
PosteriorChain run_chain(const SampleLikelihood& likelihood, std::string_view sample_id, int k,
                         const PriorSpec& priors, const McmcConfig& cfg,
                         Restriction restriction = Restriction::full);

PosteriorSummary summarize(const PosteriorChain& chain);

double max_observed_log_likelihood(const PosteriorChain& chain);

/// CSV with columns iteration, alpha, w_1..w_K, nu, log_likelihood.
void write_chain_csv(std::ostream& out, const PosteriorChain& chain);

}  // namespace strainmix
