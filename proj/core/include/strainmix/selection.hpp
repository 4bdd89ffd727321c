#pragma once
// Model choice over the number of strains and the two restricted models.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "strainmix/inference.hpp"

namespace strainmix {

struct KRange {
    int lo = 1;
    int hi = 7;

    bool contains(int k) const noexcept { return k >= lo && k <= hi; }
};

/// Parses "3" or "1..7".
KRange parse_k_range(std::string_view text);

/// Largest K select_k will fit (2^K bands per SNP).
inline constexpr int kMaxSelectableK = 8;

enum class Selector { bic, hme };

struct ModelScore {
    int k = 1;
    Restriction restriction = Restriction::full;
    double bic = 0.0;
    double hme_log_marginal = 0.0;
    double max_log_likelihood = 0.0;
    int n_free_params = 0;
    double log_k_prior = 0.0;
    PosteriorSummary summary;
    AcceptanceRates acceptance;
};

struct SelectionOptions {
    Selector selector = Selector::bic;
    /// Adds log P(K) to the harmonic-mean log marginals when ranking by hme.
    bool prior_odds = false;
    /// Fit the alpha_zero and k_one restrictions next to the full model.
    bool include_restricted = true;
    std::size_t jobs = 1;
    bool keep_chains = false;
};

struct SelectionResult {
    std::string sample_id;
    std::size_t n_obs = 0;
    std::vector<ModelScore> scores;  ///< ordered by (k, restriction)
    std::size_t selected = 0;        ///< index into scores
    std::vector<PosteriorChain> chains;  ///< parallel to scores when keep_chains

    const ModelScore& selected_score() const { return scores.at(selected); }
    int selected_k() const { return selected_score().k; }
    Restriction selected_restriction() const { return selected_score().restriction; }

    const ModelScore* find(int k, Restriction r) const noexcept;
    /// Lowest-BIC (or best-hme) score within one restriction.
    const ModelScore* best_of(Restriction r, Selector selector = Selector::bic,
                              bool prior_odds = false) const noexcept;
};

/// (K - 1) simplex coordinates plus alpha and nu, minus what the restriction pins.
int n_free_params(int k, Restriction restriction);

/// -2 max_log_likelihood + n_free_params ln(n_obs).
double bic(double max_log_likelihood, int n_free_params, std::size_t n_obs);

/// log of the harmonic mean of the draws' likelihoods,
/// -log((1/n) sum exp(-logL_i)), evaluated with log-sum-exp.
double harmonic_mean_log_marginal(const PosteriorChain& chain);

ModelScore score_chain(const PosteriorChain& chain, std::size_t n_obs, const PriorSpec& priors);

/// Index of the winning score. Lower BIC (or higher hme) wins; ties go to the
/// smaller K, then fewer free parameters, then k_one before alpha_zero before full.
std::size_t select_best(const std::vector<ModelScore>& scores, Selector selector,
                        bool prior_odds);

/// Fits the full model for every K in range, the alpha_zero restriction for
/// every K in range and the single k_one fit. The full K = 1 model and k_one
/// are the same model, so the k_one chain scores both.
/// Throws InferenceError naming the (k, restriction) of a failed fit.
SelectionResult select_k(const SampleData& data, const Plaf& plaf, KRange k_range,
                         const PriorSpec& priors, const McmcConfig& cfg,
                         const SelectionOptions& options = {});

}  // namespace strainmix
