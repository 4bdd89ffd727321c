#include "strainmix/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "strainmix/errors.hpp"
#include "strainmix/numeric.hpp"

namespace strainmix {

namespace {

constexpr int kMaxInitAttempts = 100;

struct BlockCounter {
    std::size_t proposed = 0;
    std::size_t accepted = 0;

    std::optional<double> rate() const {
        if (proposed == 0) return std::nullopt;
        return static_cast<double>(accepted) / static_cast<double>(proposed);
    }
};

bool in_support(const ModelParams& params, const McmcConfig& cfg) {
    if (cfg.nu_lower_bound && params.nu < *cfg.nu_lower_bound) return false;
    if (cfg.nu_unimodal && params.nu < nu_unimodal_bound(params)) return false;
    return true;
}

std::vector<double> sorted_desc(std::vector<double> w) {
    std::sort(w.begin(), w.end(), std::greater<>());
    return w;
}


}  // namespace

std::string_view to_string(Restriction r) noexcept {
    switch (r) {
        case Restriction::full: return "full";
        case Restriction::alpha_zero: return "alpha_zero";
        case Restriction::k_one: return "k_one";
    }
    return "full";
}

Restriction parse_restriction(std::string_view name) {
    if (name == "full") return Restriction::full;
    if (name == "alpha_zero") return Restriction::alpha_zero;
    if (name == "k_one") return Restriction::k_one;
    throw std::invalid_argument("unknown restriction '" + std::string(name) + "'");
}

void PriorSpec::validate() const {
    if (!(dirichlet_concentration > 0.0) || !(nu_mean > 0.0) || !(k_poisson_rate > 0.0)) {
        throw std::invalid_argument("prior hyperparameters must be positive");
    }
}

std::vector<double> PriorSpec::concentration(int k) const {
    return std::vector<double>(static_cast<std::size_t>(k), dirichlet_concentration);
}

double PriorSpec::log_k_prior(int k) const {
    if (k < 1) throw std::invalid_argument("K must be positive");
    const double rate = k_poisson_rate;
    // P(K = k | K > 0) = e^-rate rate^k / (k! (1 - e^-rate))
    return -rate + k * std::log(rate) - log_gamma(k + 1.0) - std::log(-std::expm1(-rate));
}

void McmcConfig::validate() const {
    if (n_iterations == 0) throw std::invalid_argument("n_iterations must be positive");
    if (burn_in >= n_iterations) throw std::invalid_argument("burn_in must be < n_iterations");
    if (thin == 0) throw std::invalid_argument("thin must be >= 1");
    if (nu_lower_bound && !(*nu_lower_bound > 0.0)) {
        throw std::invalid_argument("nu_lower_bound must be positive");
    }
    if (init_candidates < 1) throw std::invalid_argument("init_candidates must be >= 1");
}

std::size_t McmcConfig::expected_draws() const noexcept {
    return burn_in >= n_iterations ? 0 : (n_iterations - burn_in) / thin;
}

double nu_unimodal_bound(const ModelParams& params) {
    const BandSet bands(params.k);
    const std::vector<double> q = band_wsaf(bands, params, 0.5);
    double bound = 0.0;
    for (std::size_t r = 1; r + 1 < bands.size(); ++r) {
        const double qc = clamp_frequency(q[r]);
        bound = std::max(bound, 1.0 / std::min(qc, 1.0 - qc));
    }
    return bound;
}

bool accept_independence_proposal(double current_log_lik, double proposed_log_lik, Rng& rng) {
    const double log_ratio = proposed_log_lik - current_log_lik;
    if (log_ratio >= 0.0) return true;
    return std::log(sample_uniform(rng)) < log_ratio;
}

ModelParams sample_prior(int k, Restriction restriction, const PriorSpec& priors, Rng& rng) {
    ModelParams p;
    p.k = restriction == Restriction::k_one ? 1 : k;
    p.alpha = restriction == Restriction::alpha_zero ? kAlphaZeroValue : sample_uniform(rng);
    p.weights = p.k == 1 ? std::vector<double>{1.0}
                         : sorted_desc(sample_dirichlet(rng, priors.concentration(p.k)));
    p.nu = sample_exponential(rng, priors.nu_mean);
    return p;
}

PosteriorChain run_chain(const SampleData& data, const Plaf& plaf, int k,
                         const PriorSpec& priors, const McmcConfig& cfg,
                         Restriction restriction) {
    return run_chain(SampleLikelihood(data, plaf), data.sample_id, k, priors, cfg, restriction);
}

PosteriorChain run_chain(const SampleLikelihood& likelihood, std::string_view sample_id, int k,
                         const PriorSpec& priors, const McmcConfig& cfg,
                         Restriction restriction) {
    priors.validate();
    cfg.validate();
    if (k < 1 || k > kMaxBandStrains) throw std::invalid_argument("k out of range");
    if (restriction == Restriction::k_one && k != 1) {
        throw std::invalid_argument("the k_one restriction requires k = 1");
    }

    Rng rng(derive_seed(cfg.seed, sample_id, static_cast<std::uint64_t>(k),
                        static_cast<std::uint64_t>(restriction)));

    // A single prior draw can land in the small-nu, large-alpha corner, which
    // mimics an unmixed sample and is rarely left with one-block moves.
    ModelParams state;
    double state_ll = -std::numeric_limits<double>::infinity();
    int finite = 0;
    int failures = 0;
    while (finite < cfg.init_candidates && failures < kMaxInitAttempts) {
        ModelParams candidate = sample_prior(k, restriction, priors, rng);
        // The support constraints only bound nu from below; shifting an
        // exponential draw by the bound samples the prior truncated to the support.
        double floor = cfg.nu_lower_bound.value_or(0.0);
        if (cfg.nu_unimodal) floor = std::max(floor, nu_unimodal_bound(candidate));
        if (candidate.nu < floor) candidate.nu = floor + sample_exponential(rng, priors.nu_mean);
        double ll = 0.0;
        try {
            ll = likelihood(candidate);
        } catch (const InferenceError&) {
            ll = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(ll)) {
            ++failures;
            continue;
        }
        ++finite;
        if (ll > state_ll) {
            state = std::move(candidate);
            state_ll = ll;
        }
    }
    if (finite == 0) {
        throw InferenceError("sample '" + std::string(sample_id) +
                             "': no finite initial state after 100 prior draws");
    }

    const bool alpha_free = restriction != Restriction::alpha_zero;
    const bool weights_free = state.k > 1;
    BlockCounter alpha_count;
    BlockCounter weight_count;
    BlockCounter nu_count;

    const auto try_move = [&](ModelParams proposal, BlockCounter& counter) {
        ++counter.proposed;
        if (!in_support(proposal, cfg)) return;
        double proposal_ll = 0.0;
        try {
            proposal_ll = likelihood(proposal);
        } catch (const InferenceError&) {
            return;
        }
        if (accept_independence_proposal(state_ll, proposal_ll, rng)) {
            state = std::move(proposal);
            state_ll = proposal_ll;
            ++counter.accepted;
        }
    };

    PosteriorChain chain;
    chain.k = state.k;
    chain.restriction = restriction;
    chain.config = cfg;
    chain.draws.reserve(cfg.expected_draws());

    for (std::size_t it = 1; it <= cfg.n_iterations; ++it) {
        if (alpha_free) {
            ModelParams proposal = state;
            proposal.alpha = sample_uniform(rng);
            try_move(std::move(proposal), alpha_count);
        }
        if (weights_free) {
            ModelParams proposal = state;
            proposal.weights = sorted_desc(sample_dirichlet(rng, priors.concentration(state.k)));
            try_move(std::move(proposal), weight_count);
        }
        {
            ModelParams proposal = state;
            proposal.nu = sample_exponential(rng, priors.nu_mean);
            try_move(std::move(proposal), nu_count);
        }
        if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
            chain.draws.push_back({it, state, state_ll});
        }
    }

    chain.acceptance = {alpha_count.rate(), weight_count.rate(), nu_count.rate()};
    return chain;
}

PosteriorSummary summarize(const PosteriorChain& chain) {
    if (chain.draws.empty()) throw InferenceError("cannot summarize an empty chain");
    const auto best = std::max_element(
        chain.draws.begin(), chain.draws.end(),
        [](const Draw& a, const Draw& b) { return a.log_likelihood < b.log_likelihood; });

    PosteriorSummary s;
    s.map_params = best->params;
    s.max_log_likelihood = best->log_likelihood;

    std::vector<double> alpha;
    std::vector<double> nu;
    std::vector<std::vector<double>> weights(static_cast<std::size_t>(chain.k));
    for (const Draw& d : chain.draws) {
        alpha.push_back(d.params.alpha);
        nu.push_back(d.params.nu);
        const auto w = sorted_desc(d.params.weights);
        for (std::size_t i = 0; i < weights.size(); ++i) weights[i].push_back(w[i]);
    }
    s.alpha = equal_tailed_interval(std::move(alpha));
    s.nu = equal_tailed_interval(std::move(nu));
    for (auto& column : weights) s.weights.push_back(equal_tailed_interval(std::move(column)));
    return s;
}

double max_observed_log_likelihood(const PosteriorChain& chain) {
    if (chain.draws.empty()) throw InferenceError("empty chain has no maximum");
    double best = -std::numeric_limits<double>::infinity();
    for (const Draw& d : chain.draws) best = std::max(best, d.log_likelihood);
    return best;
}

void write_chain_csv(std::ostream& out, const PosteriorChain& chain) {
    out << "iteration,alpha";
    for (int i = 1; i <= chain.k; ++i) out << ",w_" << i;
    out << ",nu,log_likelihood\n";
    for (const Draw& d : chain.draws) {
        out << d.iteration << ',';
        out << format_number(d.params.alpha);
        for (double w : d.params.weights) {
            out << ',';
            out << format_number(w);
        }
        out << ',';
        out << format_number(d.params.nu);
        out << ',';
        out << format_number(d.log_likelihood);
        out << '\n';
    }
}

}  // namespace strainmix
