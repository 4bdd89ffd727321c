#pragma once
// Synthetic data drawn from the band mixture, and the grid study built on it.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strainmix/inference.hpp"
#include "strainmix/model.hpp"
#include "strainmix/random.hpp"
#include "strainmix/selection.hpp"

namespace strainmix {

struct SimConfig {
    std::size_t m = 500;
    std::uint32_t coverage = 100;
    int k = 1;
    double alpha = 0.01;
    double nu = 10.0;
    std::optional<std::vector<double>> weights;  ///< drawn from Dirichlet(1_K) when absent
    std::uint64_t seed = 0;
    std::string sample_id = "sim";

    void validate() const;
};

struct SimulatedSample {
    SampleData data;
    Plaf plaf;
    ModelParams truth;
    std::vector<std::uint32_t> band_of_snp;  ///< band mask each SNP was drawn from
};

/// p_j = j / M for j = 1..M, clamped into the open interval.
Plaf evenly_spaced_plaf(std::size_t m);

/// Draws one band per SNP with probability lambda_r(p_j), then beta-binomial
/// read counts around the band's clamped frequency.
SampleData simulate_reads(const ModelParams& params, const Plaf& plaf,
                          std::span<const std::uint32_t> coverage, Rng& rng,
                          std::string sample_id = "sim",
                          std::vector<std::uint32_t>* band_of_snp = nullptr);

SimulatedSample simulate_sample(const SimConfig& cfg);

struct StudyCell {
    std::size_t m = 0;
    std::uint32_t c = 0;
    double alpha = 0.0;
    int k = 1;
};

struct StudyGrid {
    std::vector<std::size_t> m_values{50, 150, 500, 2500};
    std::vector<std::uint32_t> c_values{10, 25, 100, 250};
    std::vector<double> alpha_values{0.01, 0.1, 0.5};
    std::vector<int> k_values{1, 3};
    std::size_t replicates = 10;

    /// Full grid: 4 x 4 x 3 x 2 cells, 10 replicates each.
    static StudyGrid full();
    /// Desk-scale grid of 24 runs.
    static StudyGrid smoke();

    void validate() const;
    std::vector<StudyCell> cells() const;  ///< ordered m, c, alpha, k (k fastest)
    std::size_t n_runs() const { return cells().size() * replicates; }
};

struct StudyOptions {
    /// Candidate K values; the true K of each cell is always added.
    KRange k_range{1, 5};
    /// K is chosen among full models only; the restrictions answer a different question.
    SelectionOptions selection{.include_restricted = false};
    double nu = 10.0;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    /// Called after each run finishes (serialized).
    std::function<void(std::size_t done, std::size_t total)> progress;
};

struct StudyRow {
    StudyCell cell;
    std::size_t replicate = 0;
    int k_hat = 0;
    double w_msd = 0.0;      ///< mean squared deviation of posterior-median W at the true K
    double alpha_and = 0.0;  ///< |alpha_hat - alpha| / alpha at the true K
    double runtime_seconds = 0.0;
    bool ok = false;
    std::string error;
};

struct StudyAggregate {
    StudyCell cell;
    std::size_t n_ok = 0;
    double frac_k_correct = 0.0;
    double mean_k_hat = 0.0;
    double mean_w_msd = 0.0;
    double median_w_msd = 0.0;
    double mean_alpha_and = 0.0;
    double median_alpha_and = 0.0;
};

struct StudyReport {
    std::vector<StudyRow> rows;  ///< one per (cell, replicate), grid order
    std::vector<StudyAggregate> aggregates;
    std::size_t failures() const;
};

/// Metrics of one fitted replicate against its truth. Both W vectors are
/// compared after sorting descending.
double weight_msd(std::span<const double> estimate, std::span<const double> truth);
double alpha_abs_normalized_deviation(double estimate, double truth);

/// Simulates and fits every (cell, replicate). Each run's RNG streams derive
/// from (options.seed, cell index, replicate). A failed run is recorded with
/// ok = false and the study continues. When out_dir is non-empty, study.csv
/// and summary.csv are written there.
StudyReport run_study(const StudyGrid& grid, const PriorSpec& priors, const McmcConfig& cfg,
                      const StudyOptions& options, const std::filesystem::path& out_dir = {});

std::vector<StudyAggregate> aggregate_study(const std::vector<StudyRow>& rows);

/// Columns: m, c, alpha, k_true, replicate, k_hat, w_msd, alpha_and,
/// runtime_seconds, status.
void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows);
void write_study_summary_csv(std::ostream& out, const std::vector<StudyAggregate>& aggregates);

}  // namespace strainmix
