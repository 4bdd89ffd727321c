#pragma once
// Beta-binomial band mixture: the per-sample likelihood of read counts given
// the number of strains, their proportions, the panmixia coefficient and the
// beta-binomial shape.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace strainmix {

/// Frequencies handed to the beta-binomial are clamped into [kFreqClamp, 1 - kFreqClamp].
inline constexpr double kFreqClamp = 1e-6;

/// Largest strain count a BandSet can enumerate.
inline constexpr int kMaxBandStrains = 16;

double clamp_frequency(double q) noexcept;

struct SnpCounts {
    std::uint32_t ref_reads = 0;
    std::uint32_t nonref_reads = 0;

    std::uint32_t total() const noexcept { return ref_reads + nonref_reads; }
    friend bool operator==(const SnpCounts&, const SnpCounts&) = default;
};

struct SampleData {
    std::string sample_id;
    std::vector<SnpCounts> counts;

    std::size_t size() const noexcept { return counts.size(); }
    friend bool operator==(const SampleData&, const SampleData&) = default;
};

/// Population-level non-reference allele frequencies, one per SNP, each in (0, 1).
class Plaf {
  public:
    Plaf() = default;
    explicit Plaf(std::vector<double> freqs);

    std::span<const double> values() const noexcept { return freqs_; }
    double operator[](std::size_t j) const noexcept { return freqs_[j]; }
    std::size_t size() const noexcept { return freqs_.size(); }
    bool empty() const noexcept { return freqs_.empty(); }

    friend bool operator==(const Plaf&, const Plaf&) = default;

  private:
    std::vector<double> freqs_;
};

/// The 2^k subsets of strains that can carry the non-reference allele.
/// Band r is the subset whose bitmask is r; bit i stands for strain i.
class BandSet {
  public:
    explicit BandSet(int k);

    int k() const noexcept { return k_; }
    std::size_t size() const noexcept { return cardinality_.size(); }
    std::uint32_t mask(std::size_t r) const noexcept { return static_cast<std::uint32_t>(r); }
    int cardinality(std::size_t r) const noexcept { return cardinality_[r]; }

  private:
    int k_;
    std::vector<int> cardinality_;
};

struct ModelParams {
    int k = 1;
    std::vector<double> weights{1.0};
    double alpha = 0.0;
    double nu = 1.0;

    /// Throws std::invalid_argument unless weights form a simplex of size k
    /// (sum within 1e-10, entries in (0, 1]), alpha in [0, 1] and nu > 0.
    void validate() const;

    /// Weights sorted descending: the representative of the label-switching orbit.
    bool is_canonical() const noexcept;
    ModelParams canonical() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// lambda_r(p) = p^{C_r} (1-p)^{k-C_r}; sums to one over the band set.
std::vector<double> band_weights(const BandSet& bands, double p);

/// Within-sample allele frequency of each band:
/// q_r = (1 - alpha) * sum_{i in r} w_i + alpha * p. Not clamped.
std::vector<double> band_wsaf(const BandSet& bands, const ModelParams& params, double p);

/// log P(nonref, ref | q, nu) under the beta-binomial with shapes (q nu, (1-q) nu),
/// binomial coefficient included. Requires q in (0, 1), nu > 0 and coverage >= 1.
double beta_binomial_log_pmf(SnpCounts counts, double q, double nu);

/// log sum_r lambda_r(p) P(counts | clamp(q_r), nu). Zero-coverage sites contribute 0.
double snp_log_likelihood(SnpCounts counts, const BandSet& bands, const ModelParams& params,
                          double p);

/// Sum of snp_log_likelihood over the aligned SNP panel.
double sample_log_likelihood(const SampleData& data, const Plaf& plaf,
                             const ModelParams& params);

/// Per-sample evaluator with the parameter-free terms (log binomial
/// coefficients, log p, log(1 - p)) computed once. sample_log_likelihood is a
/// thin wrapper over this, so both give bit-identical values. Const evaluation
/// is safe from multiple threads.
class SampleLikelihood {
  public:
    SampleLikelihood(const SampleData& data, const Plaf& plaf);

    double operator()(const ModelParams& params) const;

    /// SNPs with non-zero coverage; zero-coverage SNPs are dropped at construction.
    std::size_t informative_sites() const noexcept { return sites_.size(); }

  private:
    struct Site {
        std::uint32_t ref = 0;
        std::uint32_t nonref = 0;
        double p = 0.5;
        double log_p = 0.0;
        double log_1mp = 0.0;
        double log_choose = 0.0;
    };
    std::vector<Site> sites_;
};

}  // namespace strainmix
