#pragma once
// Read-count ingestion, quality-control filters and the pooled PLAF estimate.
//
// Canonical TSV layout, one row per (SNP, sample) cell:
//
//   snp_id<TAB>sample_id<TAB>ref<TAB>nonref
//
// SNP and sample order follow first appearance in the file. Missing data is
// written as ref=0, nonref=0. The JSON layout carries `snp_ids`, `sample_ids`
// and two row-major matrices `ref` and `nonref` with one row per sample.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "strainmix/model.hpp"

namespace strainmix {

enum class CountFormat { tsv, json };

CountFormat parse_count_format(std::string_view name);
std::string_view to_string(CountFormat format) noexcept;

struct Dataset {
    std::vector<std::string> snp_ids;
    std::vector<SampleData> samples;
    std::optional<Plaf> plaf;

    std::size_t n_snps() const noexcept { return snp_ids.size(); }
    std::size_t n_samples() const noexcept { return samples.size(); }

    /// Throws InputError on ragged samples or duplicate identifiers.
    void validate() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct FilterConfig {
    double min_maf = 0.01;
    std::size_t max_low_coverage_snps = 4000;
    std::uint32_t low_coverage_threshold = 20;
    bool drop_missing = true;

    void validate() const;
};

struct FilterReport {
    std::size_t samples_raw = 0;
    std::size_t snps_raw = 0;
    std::vector<std::string> samples_removed_low_coverage;
    std::size_t snps_removed_missing = 0;
    std::size_t snps_removed_maf = 0;
    std::size_t snps_removed_no_variation = 0;
    std::size_t samples_final = 0;
    std::size_t snps_final = 0;
};

struct FilterResult {
    Dataset dataset;
    FilterReport report;
};

Dataset parse_counts_tsv(std::istream& in);
Dataset parse_counts_json(std::istream& in);

/// Loads a count table without filtering. Throws InputError naming the line
/// (TSV) or field (JSON) on malformed input.
Dataset load_counts(const std::filesystem::path& path, CountFormat format);

void write_counts_tsv(std::ostream& out, const Dataset& ds);
/// Same layout parse_counts_json reads: rows are samples.
void write_counts_json(std::ostream& out, const Dataset& ds);

/// Filters, in order: samples with more than max_low_coverage_snps SNPs below
/// low_coverage_threshold reads; SNPs with a zero-coverage cell (when
/// drop_missing); SNPs whose pooled minor allele frequency is below min_maf;
/// SNPs without any reference or without any non-reference read.
FilterResult apply_filters(Dataset ds, const FilterConfig& cfg);

/// Pooled non-reference read fraction per SNP, clamped into [1e-6, 1 - 1e-6].
Plaf compute_plaf(const Dataset& ds);

void write_plaf_tsv(std::ostream& out, const std::vector<std::string>& snp_ids, const Plaf& plaf);

/// Reads `snp_id<TAB>plaf` rows and returns them in the order of `snp_ids`.
/// Every requested SNP must be present; extra rows are ignored.
Plaf read_plaf_tsv(std::istream& in, const std::vector<std::string>& snp_ids);

}  // namespace strainmix
