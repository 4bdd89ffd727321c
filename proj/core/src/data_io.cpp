#include "strainmix/data_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "strainmix/errors.hpp"
#include "strainmix/numeric.hpp"

namespace strainmix {

namespace {

constexpr std::string_view kCountsHeader = "snp_id\tsample_id\tref\tnonref";
constexpr std::string_view kPlafHeader = "snp_id\tplaf";

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::uint32_t parse_count(std::string_view field, std::string_view column, std::size_t line) {
    if (!field.empty() && field.front() == '-') {
        throw InputError("negative " + std::string(column) + " count '" + std::string(field) + "'",
                         line);
    }
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
        throw InputError("invalid " + std::string(column) + " count '" + std::string(field) + "'",
                         line);
    }
    if (value > std::numeric_limits<std::uint32_t>::max()) {
        throw InputError(std::string(column) + " count out of range", line);
    }
    return static_cast<std::uint32_t>(value);
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

struct Cell {
    SnpCounts counts;
    std::size_t line = 0;
};

}  // namespace

CountFormat parse_count_format(std::string_view name) {
    if (name == "tsv") return CountFormat::tsv;
    if (name == "json") return CountFormat::json;
    throw InputError("unknown count format '" + std::string(name) + "' (expected tsv or json)");
}

std::string_view to_string(CountFormat format) noexcept {
    return format == CountFormat::tsv ? "tsv" : "json";
}

void Dataset::validate() const {
    std::unordered_map<std::string_view, std::size_t> seen;
    for (const auto& id : snp_ids) {
        if (!seen.emplace(id, 0).second) throw InputError("duplicate SNP id '" + id + "'");
    }
    seen.clear();
    for (const auto& s : samples) {
        if (!seen.emplace(s.sample_id, 0).second) {
            throw InputError("duplicate sample id '" + s.sample_id + "'");
        }
        if (s.size() != snp_ids.size()) {
            throw InputError("sample '" + s.sample_id + "' has " + std::to_string(s.size()) +
                             " SNPs, expected " + std::to_string(snp_ids.size()));
        }
    }
    if (plaf && plaf->size() != snp_ids.size()) {
        throw InputError("PLAF length does not match the SNP panel");
    }
}

void FilterConfig::validate() const {
    if (!(min_maf >= 0.0 && min_maf < 0.5)) {
        throw std::invalid_argument("min_maf must lie in [0, 0.5)");
    }
}

Dataset parse_counts_tsv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw InputError("empty count table", 1);
    strip_cr(line);
    if (line != kCountsHeader) {
        throw InputError("expected header 'snp_id<TAB>sample_id<TAB>ref<TAB>nonref'", 1);
    }

    Dataset ds;
    std::unordered_map<std::string, std::size_t> snp_index;
    std::unordered_map<std::string, std::size_t> sample_index;
    std::vector<std::string> sample_ids;
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, Cell>> cells;

    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 4) {
            throw InputError("expected 4 tab-separated fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        if (fields[0].empty() || fields[1].empty()) throw InputError("empty identifier", line_no);
        const SnpCounts counts{parse_count(fields[2], "ref", line_no),
                               parse_count(fields[3], "nonref", line_no)};

        auto [snp_it, new_snp] = snp_index.try_emplace(std::string(fields[0]), ds.snp_ids.size());
        if (new_snp) ds.snp_ids.emplace_back(fields[0]);
        auto [smp_it, new_smp] =
            sample_index.try_emplace(std::string(fields[1]), sample_ids.size());
        if (new_smp) sample_ids.emplace_back(fields[1]);
        cells.push_back({{snp_it->second, smp_it->second}, Cell{counts, line_no}});
    }

    const std::size_t m = ds.snp_ids.size();
    const std::size_t n = sample_ids.size();
    if (n == 0) throw InputError("count table has no data rows");
    std::vector<std::size_t> first_line(m * n, 0);
    ds.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.samples[i].sample_id = sample_ids[i];
        ds.samples[i].counts.resize(m);
    }
    for (const auto& [key, cell] : cells) {
        const auto [j, i] = key;
        std::size_t& seen = first_line[i * m + j];
        if (seen != 0) {
            throw InputError("duplicate record for sample '" + sample_ids[i] + "' at SNP '" +
                                 ds.snp_ids[j] + "' (first seen on line " +
                                 std::to_string(seen) + ")",
                             cell.line);
        }
        seen = cell.line;
        ds.samples[i].counts[j] = cell.counts;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (first_line[i * m + j] == 0) {
                throw InputError("ragged table: no record for sample '" + sample_ids[i] +
                                 "' at SNP '" + ds.snp_ids[j] + "'");
            }
        }
    }
    return ds;
}

Dataset parse_counts_json(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("invalid JSON: ") + e.what());
    }
    Dataset ds;
    std::vector<std::string> sample_ids;
    try {
        ds.snp_ids = doc.at("snp_ids").get<std::vector<std::string>>();
        sample_ids = doc.at("sample_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("JSON counts need string arrays 'snp_ids' and 'sample_ids': ") +
                         e.what());
    }
    const auto read_matrix = [&](const char* key) {
        const auto it = doc.find(key);
        if (it == doc.end() || !it->is_array() || it->size() != sample_ids.size()) {
            throw InputError(std::string("'") + key + "' must be an array with one row per sample");
        }
        std::vector<std::vector<std::uint32_t>> rows;
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& row = (*it)[i];
            if (!row.is_array() || row.size() != ds.snp_ids.size()) {
                throw InputError(std::string("'") + key + "' row " + std::to_string(i) +
                                 " must have one entry per SNP");
            }
            std::vector<std::uint32_t> values;
            for (const auto& v : row) {
                if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
                    v.get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
                    throw InputError(std::string("'") + key + "' row " + std::to_string(i) +
                                     " holds a value that is not a non-negative integer count");
                }
                values.push_back(v.get<std::uint32_t>());
            }
            rows.push_back(std::move(values));
        }
        return rows;
    };
    const auto ref = read_matrix("ref");
    const auto nonref = read_matrix("nonref");
    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
        SampleData s{sample_ids[i], {}};
        s.counts.reserve(ds.snp_ids.size());
        for (std::size_t j = 0; j < ds.snp_ids.size(); ++j) {
            s.counts.push_back({ref[i][j], nonref[i][j]});
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw InputError("count table has no samples");
    ds.validate();
    return ds;
}

Dataset load_counts(const std::filesystem::path& path, CountFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    Dataset ds = format == CountFormat::tsv ? parse_counts_tsv(in) : parse_counts_json(in);
    ds.validate();
    return ds;
}

void write_counts_tsv(std::ostream& out, const Dataset& ds) {
    out << kCountsHeader << '\n';
    for (std::size_t j = 0; j < ds.n_snps(); ++j) {
        for (const auto& s : ds.samples) {
            out << ds.snp_ids[j] << '\t' << s.sample_id << '\t' << s.counts[j].ref_reads << '\t'
                << s.counts[j].nonref_reads << '\n';
        }
    }
}

void write_counts_json(std::ostream& out, const Dataset& ds) {
    nlohmann::json doc;
    doc["snp_ids"] = ds.snp_ids;
    auto& ids = doc["sample_ids"] = nlohmann::json::array();
    auto& ref = doc["ref"] = nlohmann::json::array();
    auto& nonref = doc["nonref"] = nlohmann::json::array();
    for (const auto& s : ds.samples) {
        ids.push_back(s.sample_id);
        std::vector<std::uint32_t> r;
        std::vector<std::uint32_t> n;
        for (const auto& c : s.counts) {
            r.push_back(c.ref_reads);
            n.push_back(c.nonref_reads);
        }
        ref.push_back(std::move(r));
        nonref.push_back(std::move(n));
    }
    out << doc.dump() << '\n';
}

FilterResult apply_filters(Dataset ds, const FilterConfig& cfg) {
    cfg.validate();
    ds.validate();
    FilterReport report;
    report.samples_raw = ds.n_samples();
    report.snps_raw = ds.n_snps();

    std::vector<SampleData> kept_samples;
    for (auto& s : ds.samples) {
        std::size_t low = 0;
        for (const auto& c : s.counts) low += c.total() < cfg.low_coverage_threshold;
        if (low > cfg.max_low_coverage_snps) {
            report.samples_removed_low_coverage.push_back(s.sample_id);
        } else {
            kept_samples.push_back(std::move(s));
        }
    }
    if (kept_samples.empty()) throw InputError("all samples removed by the low-coverage filter");

    std::vector<std::size_t> kept_snps;
    for (std::size_t j = 0; j < ds.n_snps(); ++j) {
        std::uint64_t ref = 0;
        std::uint64_t nonref = 0;
        bool missing = false;
        for (const auto& s : kept_samples) {
            missing |= s.counts[j].total() == 0;
            ref += s.counts[j].ref_reads;
            nonref += s.counts[j].nonref_reads;
        }
        if (cfg.drop_missing && missing) {
            ++report.snps_removed_missing;
            continue;
        }
        const std::uint64_t total = ref + nonref;
        if (total == 0) {
            ++report.snps_removed_maf;
            continue;
        }
        const double freq = static_cast<double>(nonref) / static_cast<double>(total);
        if (std::min(freq, 1.0 - freq) < cfg.min_maf) {
            ++report.snps_removed_maf;
            continue;
        }
        if (ref == 0 || nonref == 0) {
            ++report.snps_removed_no_variation;
            continue;
        }
        kept_snps.push_back(j);
    }
    if (kept_snps.empty()) throw InputError("all SNPs removed by filters");

    Dataset out;
    out.snp_ids.reserve(kept_snps.size());
    for (std::size_t j : kept_snps) out.snp_ids.push_back(ds.snp_ids[j]);
    if (ds.plaf) {
        std::vector<double> p;
        for (std::size_t j : kept_snps) p.push_back((*ds.plaf)[j]);
        out.plaf = Plaf(std::move(p));
    }
    for (auto& s : kept_samples) {
        SampleData t{std::move(s.sample_id), {}};
        t.counts.reserve(kept_snps.size());
        for (std::size_t j : kept_snps) t.counts.push_back(s.counts[j]);
        out.samples.push_back(std::move(t));
    }
    report.samples_final = out.n_samples();
    report.snps_final = out.n_snps();
    return {std::move(out), std::move(report)};
}

Plaf compute_plaf(const Dataset& ds) {
    std::vector<double> freqs(ds.n_snps());
    for (std::size_t j = 0; j < ds.n_snps(); ++j) {
        std::uint64_t nonref = 0;
        std::uint64_t total = 0;
        for (const auto& s : ds.samples) {
            nonref += s.counts[j].nonref_reads;
            total += s.counts[j].total();
        }
        if (total == 0) {
            throw InputError("SNP '" + ds.snp_ids[j] + "' has no reads in any sample");
        }
        freqs[j] = clamp_frequency(static_cast<double>(nonref) / static_cast<double>(total));
    }
    return Plaf(std::move(freqs));
}

void write_plaf_tsv(std::ostream& out, const std::vector<std::string>& snp_ids,
                    const Plaf& plaf) {
    if (snp_ids.size() != plaf.size()) throw std::invalid_argument("PLAF/SNP length mismatch");
    out << kPlafHeader << '\n';
    for (std::size_t j = 0; j < plaf.size(); ++j) {
        out << snp_ids[j] << '\t' << format_number(plaf[j]) << '\n';
    }
}

Plaf read_plaf_tsv(std::istream& in, const std::vector<std::string>& snp_ids) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty PLAF table", 1);
    strip_cr(line);
    if (line != kPlafHeader) throw InputError("expected header 'snp_id<TAB>plaf'", 1);

    std::unordered_map<std::string, double> by_id;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2) throw InputError("expected 2 tab-separated fields", line_no);
        double p = 0.0;
        const auto [ptr, ec] =
            std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), p);
        if (ec != std::errc{} || ptr != fields[1].data() + fields[1].size()) {
            throw InputError("invalid PLAF value '" + std::string(fields[1]) + "'", line_no);
        }
        if (!(p > 0.0 && p < 1.0)) throw InputError("PLAF value outside (0, 1)", line_no);
        if (!by_id.emplace(std::string(fields[0]), p).second) {
            throw InputError("duplicate SNP id '" + std::string(fields[0]) + "'", line_no);
        }
    }
    std::vector<double> freqs;
    freqs.reserve(snp_ids.size());
    for (const auto& id : snp_ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw InputError("PLAF table has no entry for SNP '" + id + "'");
        freqs.push_back(it->second);
    }
    return Plaf(std::move(freqs));
}

}  // namespace strainmix
