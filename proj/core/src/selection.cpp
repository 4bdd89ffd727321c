#include "strainmix/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

#include "strainmix/errors.hpp"
#include "strainmix/parallel.hpp"

namespace strainmix {

namespace {

int parse_int(std::string_view text) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("invalid integer '" + std::string(text) + "'");
    }
    return value;
}

int restriction_rank(Restriction r) {
    switch (r) {
        case Restriction::k_one: return 0;
        case Restriction::alpha_zero: return 1;
        case Restriction::full: return 2;
    }
    return 2;
}

double ranking_value(const ModelScore& s, Selector selector, bool prior_odds) {
    if (selector == Selector::bic) return s.bic;
    // Lower is better in both modes.
    return -(s.hme_log_marginal + (prior_odds ? s.log_k_prior : 0.0));
}

bool ranks_before(const ModelScore& a, const ModelScore& b, Selector selector, bool prior_odds) {
    return std::make_tuple(ranking_value(a, selector, prior_odds), a.k, a.n_free_params,
                           restriction_rank(a.restriction)) <
           std::make_tuple(ranking_value(b, selector, prior_odds), b.k, b.n_free_params,
                           restriction_rank(b.restriction));
}

struct FitTask {
    int k;
    Restriction restriction;
};

}  // namespace

KRange parse_k_range(std::string_view text) {
    KRange range;
    const auto dots = text.find("..");
    if (dots == std::string_view::npos) {
        range.lo = range.hi = parse_int(text);
    } else {
        range.lo = parse_int(text.substr(0, dots));
        range.hi = parse_int(text.substr(dots + 2));
    }
    if (range.lo < 1 || range.hi < range.lo) {
        throw std::invalid_argument("invalid K range '" + std::string(text) + "'");
    }
    return range;
}

const ModelScore* SelectionResult::find(int k, Restriction r) const noexcept {
    for (const auto& s : scores) {
        if (s.k == k && s.restriction == r) return &s;
    }
    return nullptr;
}

const ModelScore* SelectionResult::best_of(Restriction r, Selector selector,
                                           bool prior_odds) const noexcept {
    const ModelScore* best = nullptr;
    for (const auto& s : scores) {
        if (s.restriction != r) continue;
        if (best == nullptr || ranks_before(s, *best, selector, prior_odds)) best = &s;
    }
    return best;
}

int n_free_params(int k, Restriction restriction) {
    switch (restriction) {
        case Restriction::full: return (k - 1) + 2;
        case Restriction::alpha_zero: return (k - 1) + 1;
        case Restriction::k_one: return 2;
    }
    return (k - 1) + 2;
}

double bic(double max_log_likelihood, int n_free_params, std::size_t n_obs) {
    if (n_obs == 0) throw std::invalid_argument("BIC needs at least one observation");
    return -2.0 * max_log_likelihood + n_free_params * std::log(static_cast<double>(n_obs));
}

double harmonic_mean_log_marginal(const PosteriorChain& chain) {
    if (chain.draws.empty()) throw InferenceError("harmonic mean of an empty chain");
    // Shifted by the smallest log-likelihood so the mean term lies in (0, 1].
    double lo = chain.draws.front().log_likelihood;
    for (const Draw& d : chain.draws) lo = std::min(lo, d.log_likelihood);
    double mean = 0.0;
    for (const Draw& d : chain.draws) mean += std::exp(lo - d.log_likelihood);
    mean /= static_cast<double>(chain.draws.size());
    return lo - std::log(mean);
}

ModelScore score_chain(const PosteriorChain& chain, std::size_t n_obs, const PriorSpec& priors) {
    ModelScore s;
    s.k = chain.k;
    s.restriction = chain.restriction;
    s.summary = summarize(chain);
    s.max_log_likelihood = max_observed_log_likelihood(chain);
    s.n_free_params = n_free_params(chain.k, chain.restriction);
    s.bic = bic(s.max_log_likelihood, s.n_free_params, n_obs);
    s.hme_log_marginal = harmonic_mean_log_marginal(chain);
    s.log_k_prior = priors.log_k_prior(chain.k);
    s.acceptance = chain.acceptance;
    return s;
}

std::size_t select_best(const std::vector<ModelScore>& scores, Selector selector,
                        bool prior_odds) {
    if (scores.empty()) throw std::invalid_argument("no candidate models");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (ranks_before(scores[i], scores[best], selector, prior_odds)) best = i;
    }
    return best;
}

SelectionResult select_k(const SampleData& data, const Plaf& plaf, KRange k_range,
                         const PriorSpec& priors, const McmcConfig& cfg,
                         const SelectionOptions& options) {
    if (k_range.lo < 1 || k_range.hi < k_range.lo) throw std::invalid_argument("empty K range");
    if (k_range.hi > kMaxSelectableK) {
        throw std::invalid_argument("K range exceeds " + std::to_string(kMaxSelectableK));
    }
    const SampleLikelihood likelihood(data, plaf);

    // Unique fits; the full K = 1 slot is filled from the k_one chain.
    std::vector<FitTask> tasks;
    const bool k_one_fit = options.include_restricted || k_range.contains(1);
    if (k_one_fit) tasks.push_back({1, Restriction::k_one});
    for (int k = std::max(2, k_range.lo); k <= k_range.hi; ++k) {
        tasks.push_back({k, Restriction::full});
    }
    if (options.include_restricted) {
        for (int k = k_range.lo; k <= k_range.hi; ++k) {
            tasks.push_back({k, Restriction::alpha_zero});
        }
    }

    std::vector<PosteriorChain> chains(tasks.size());
    parallel_for(tasks.size(), options.jobs, [&](std::size_t i) {
        try {
            chains[i] = run_chain(likelihood, data.sample_id, tasks[i].k, priors, cfg,
                                  tasks[i].restriction);
        } catch (const std::exception& e) {
            throw InferenceError("sample '" + data.sample_id + "', k=" +
                                 std::to_string(tasks[i].k) + ", restriction=" +
                                 std::string(to_string(tasks[i].restriction)) + ": " + e.what());
        }
    });

    struct Entry {
        ModelScore score;
        std::size_t chain;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        ModelScore s = score_chain(chains[i], data.size(), priors);
        if (tasks[i].restriction == Restriction::k_one) {
            if (k_range.contains(1)) {
                ModelScore as_full = s;
                as_full.restriction = Restriction::full;
                as_full.n_free_params = n_free_params(1, Restriction::full);
                entries.push_back({std::move(as_full), i});
            }
            if (!options.include_restricted) continue;
        }
        entries.push_back({std::move(s), i});
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return std::make_pair(a.score.k, static_cast<int>(a.score.restriction)) <
               std::make_pair(b.score.k, static_cast<int>(b.score.restriction));
    });

    SelectionResult result;
    result.sample_id = data.sample_id;
    result.n_obs = data.size();
    for (auto& e : entries) {
        result.scores.push_back(std::move(e.score));
        if (options.keep_chains) result.chains.push_back(chains[e.chain]);
    }
    result.selected = select_best(result.scores, options.selector, options.prior_odds);
    return result;
}

}  // namespace strainmix
