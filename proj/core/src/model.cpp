#include "strainmix/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "strainmix/errors.hpp"
#include "strainmix/numeric.hpp"

namespace strainmix {

namespace {

void require_open_unit(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument(std::string(what) + " must lie in (0, 1), got " +
                                    std::to_string(p));
    }
}

// log Gamma(n + x) - log Gamma(x) for integer n >= 0.
double log_rising(std::uint32_t n, double x) noexcept {
    if (n == 0) return 0.0;
    return log_gamma(static_cast<double>(n) + x) - log_gamma(x);
}

double log_choose(std::uint32_t total, std::uint32_t nonref) noexcept {
    return log_gamma(total + 1.0) - log_gamma(nonref + 1.0) - log_gamma(total - nonref + 1.0);
}

// Shared by the scalar pmf and the site evaluator so both produce identical bits.
double bb_log_pmf(std::uint32_t ref, std::uint32_t nonref, double q, double nu, double lchoose,
                  double rising_total) noexcept {
    const double a = q * nu;
    const double b = (1.0 - q) * nu;
    return lchoose + log_rising(nonref, a) + log_rising(ref, b) - rising_total;
}

// Subset sums of the canonical (descending) weights, one per band.
struct BandTable {
    int k = 1;
    double alpha = 0.0;
    double nu = 1.0;
    std::vector<double> strain_mass;
    std::vector<int> cardinality;
};

BandTable make_band_table(const BandSet& bands, const ModelParams& params) {
    if (params.k != bands.k() || params.weights.size() != static_cast<std::size_t>(bands.k())) {
        throw std::invalid_argument("ModelParams.k does not match BandSet.k");
    }
    std::vector<double> w = params.weights;
    std::sort(w.begin(), w.end(), std::greater<>());

    BandTable table;
    table.k = bands.k();
    table.alpha = params.alpha;
    table.nu = params.nu;
    table.strain_mass.assign(bands.size(), 0.0);
    table.cardinality.resize(bands.size());
    for (std::size_t r = 1; r < bands.size(); ++r) {
        const auto low = static_cast<std::size_t>(std::countr_zero(static_cast<unsigned>(r)));
        table.strain_mass[r] = table.strain_mass[r & (r - 1)] + w[low];
    }
    for (std::size_t r = 0; r < bands.size(); ++r) {
        table.strain_mass[r] = std::min(table.strain_mass[r], 1.0);
        table.cardinality[r] = bands.cardinality(r);
    }
    return table;
}

double site_log_likelihood(const BandTable& table, std::uint32_t ref, std::uint32_t nonref,
                           double p, double log_p, double log_1mp, double lchoose,
                           double rising_total, std::vector<double>& terms) {
    const std::size_t n_bands = table.strain_mass.size();
    terms.resize(n_bands);
    const double tilt = table.alpha * p;
    const double keep = 1.0 - table.alpha;
    for (std::size_t r = 0; r < n_bands; ++r) {
        const int c = table.cardinality[r];
        const double q = clamp_frequency(keep * table.strain_mass[r] + tilt);
        const double log_lambda = c * log_p + (table.k - c) * log_1mp;
        terms[r] = log_lambda + bb_log_pmf(ref, nonref, q, table.nu, lchoose, rising_total);
    }
    return log_sum_exp(terms);
}

}  // namespace

double clamp_frequency(double q) noexcept { return std::clamp(q, kFreqClamp, 1.0 - kFreqClamp); }

Plaf::Plaf(std::vector<double> freqs) : freqs_(std::move(freqs)) {
    for (double p : freqs_) require_open_unit(p, "PLAF entry");
}

BandSet::BandSet(int k) : k_(k) {
    if (k < 1 || k > kMaxBandStrains) {
        throw std::invalid_argument("number of strains must be in [1, " +
                                    std::to_string(kMaxBandStrains) + "], got " +
                                    std::to_string(k));
    }
    const std::size_t n = std::size_t{1} << k;
    cardinality_.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        cardinality_[r] = std::popcount(static_cast<unsigned>(r));
    }
}

void ModelParams::validate() const {
    if (k < 1) throw std::invalid_argument("k must be positive");
    if (weights.size() != static_cast<std::size_t>(k)) {
        throw std::invalid_argument("weights must have k entries");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0 && w <= 1.0)) throw std::invalid_argument("weight outside (0, 1]");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw std::invalid_argument("weights do not sum to 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha outside [0, 1]");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("nu must be positive");
}

bool ModelParams::is_canonical() const noexcept {
    return std::is_sorted(weights.begin(), weights.end(), std::greater<>());
}

ModelParams ModelParams::canonical() const {
    ModelParams out = *this;
    std::sort(out.weights.begin(), out.weights.end(), std::greater<>());
    return out;
}

std::vector<double> band_weights(const BandSet& bands, double p) {
    require_open_unit(p, "allele frequency");
    std::vector<double> out(bands.size());
    for (std::size_t r = 0; r < bands.size(); ++r) {
        const int c = bands.cardinality(r);
        out[r] = std::pow(p, c) * std::pow(1.0 - p, bands.k() - c);
    }
    return out;
}

std::vector<double> band_wsaf(const BandSet& bands, const ModelParams& params, double p) {
    require_open_unit(p, "allele frequency");
    if (params.k != bands.k() || params.weights.size() != static_cast<std::size_t>(bands.k())) {
        throw std::invalid_argument("ModelParams.k does not match BandSet.k");
    }
    std::vector<double> out(bands.size());
    for (std::size_t r = 0; r < bands.size(); ++r) {
        double mass = 0.0;
        for (int i = 0; i < bands.k(); ++i) {
            if (bands.mask(r) >> i & 1U) mass += params.weights[static_cast<std::size_t>(i)];
        }
        out[r] = (1.0 - params.alpha) * std::min(mass, 1.0) + params.alpha * p;
    }
    return out;
}

double beta_binomial_log_pmf(SnpCounts counts, double q, double nu) {
    require_open_unit(q, "band frequency");
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
    const std::uint32_t total = counts.total();
    if (total == 0) throw std::invalid_argument("beta-binomial needs at least one read");
    const double value = bb_log_pmf(counts.ref_reads, counts.nonref_reads, q, nu,
                                    log_choose(total, counts.nonref_reads),
                                    log_rising(total, nu));
    if (!std::isfinite(value)) throw InferenceError("non-finite beta-binomial log-probability");
    return value;
}

double snp_log_likelihood(SnpCounts counts, const BandSet& bands, const ModelParams& params,
                          double p) {
    require_open_unit(p, "allele frequency");
    const std::uint32_t total = counts.total();
    if (total == 0) return 0.0;
    const BandTable table = make_band_table(bands, params);
    std::vector<double> terms;
    return site_log_likelihood(table, counts.ref_reads, counts.nonref_reads, p, std::log(p),
                               std::log1p(-p), log_choose(total, counts.nonref_reads),
                               log_rising(total, params.nu), terms);
}

double sample_log_likelihood(const SampleData& data, const Plaf& plaf,
                             const ModelParams& params) {
    return SampleLikelihood(data, plaf)(params);
}

SampleLikelihood::SampleLikelihood(const SampleData& data, const Plaf& plaf) {
    if (data.size() != plaf.size()) {
        throw std::invalid_argument("sample '" + data.sample_id + "' has " +
                                    std::to_string(data.size()) + " SNPs but PLAF has " +
                                    std::to_string(plaf.size()));
    }
    sites_.reserve(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        const SnpCounts c = data.counts[j];
        if (c.total() == 0) continue;
        const double p = plaf[j];
        sites_.push_back({c.ref_reads, c.nonref_reads, p, std::log(p), std::log1p(-p),
                          log_choose(c.total(), c.nonref_reads)});
    }
}

double SampleLikelihood::operator()(const ModelParams& params) const {
    const BandSet bands(params.k);
    const BandTable table = make_band_table(bands, params);
    std::vector<double> terms(bands.size());

    // Coverage is often constant across SNPs; reuse the nu-only term when it is.
    std::uint32_t cached_total = 0;
    double cached_rising = 0.0;
    double total_ll = 0.0;
    for (const Site& s : sites_) {
        const std::uint32_t total = s.ref + s.nonref;
        if (total != cached_total) {
            cached_total = total;
            cached_rising = log_rising(total, params.nu);
        }
        total_ll += site_log_likelihood(table, s.ref, s.nonref, s.p, s.log_p, s.log_1mp,
                                        s.log_choose, cached_rising, terms);
    }
    if (!std::isfinite(total_ll)) {
        throw InferenceError("non-finite sample log-likelihood");
    }
    return total_ll;
}

}  // namespace strainmix
