#include "strainmix/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "strainmix/errors.hpp"
#include "strainmix/numeric.hpp"
#include "strainmix/parallel.hpp"

namespace strainmix {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> sorted_desc(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

double mean(std::span<const double> v) {
    if (v.empty()) return kNaN;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    return sorted_quantile(v, 0.5);
}

}  // namespace

void SimConfig::validate() const {
    if (m < 1) throw std::invalid_argument("simulation needs at least one SNP");
    if (coverage < 1) throw std::invalid_argument("coverage must be at least 1");
    if (k < 1 || k > kMaxBandStrains) throw std::invalid_argument("k out of range");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha outside [0, 1]");
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
    if (weights) {
        ModelParams p{k, *weights, alpha, nu};
        p.validate();
    }
}

Plaf evenly_spaced_plaf(std::size_t m) {
    std::vector<double> p(m);
    for (std::size_t j = 0; j < m; ++j) {
        p[j] = clamp_frequency(static_cast<double>(j + 1) / static_cast<double>(m));
    }
    return Plaf(std::move(p));
}

SampleData simulate_reads(const ModelParams& params, const Plaf& plaf,
                          std::span<const std::uint32_t> coverage, Rng& rng,
                          std::string sample_id, std::vector<std::uint32_t>* band_of_snp) {
    params.validate();
    if (coverage.size() != plaf.size()) throw std::invalid_argument("coverage/PLAF mismatch");
    const BandSet bands(params.k);
    SampleData out{std::move(sample_id), {}};
    out.counts.reserve(plaf.size());
    if (band_of_snp) band_of_snp->assign(plaf.size(), 0);

    for (std::size_t j = 0; j < plaf.size(); ++j) {
        const double p = plaf[j];
        // Each strain carries the non-reference allele independently with
        // probability p, which selects band r with probability lambda_r(p).
        std::uint32_t mask = 0;
        for (int i = 0; i < params.k; ++i) {
            if (sample_uniform(rng) < p) mask |= 1U << i;
        }
        const double q = clamp_frequency(band_wsaf(bands, params, p)[mask]);
        const std::uint32_t nonref = sample_beta_binomial(rng, coverage[j], q, params.nu);
        out.counts.push_back({coverage[j] - nonref, nonref});
        if (band_of_snp) (*band_of_snp)[j] = mask;
    }
    return out;
}

SimulatedSample simulate_sample(const SimConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    ModelParams truth;
    truth.k = cfg.k;
    truth.alpha = cfg.alpha;
    truth.nu = cfg.nu;
    truth.weights = cfg.weights ? *cfg.weights
                                : sample_dirichlet(rng, std::vector<double>(cfg.k, 1.0));
    truth = truth.canonical();

    SimulatedSample sim;
    sim.plaf = evenly_spaced_plaf(cfg.m);
    const std::vector<std::uint32_t> coverage(cfg.m, cfg.coverage);
    sim.data = simulate_reads(truth, sim.plaf, coverage, rng, cfg.sample_id, &sim.band_of_snp);
    sim.truth = std::move(truth);
    return sim;
}

StudyGrid StudyGrid::full() { return StudyGrid{}; }

StudyGrid StudyGrid::smoke() {
    StudyGrid g;
    g.m_values = {150, 500};
    g.c_values = {100};
    g.alpha_values = {0.01, 0.5};
    g.k_values = {1, 3};
    g.replicates = 3;
    return g;
}

void StudyGrid::validate() const {
    if (m_values.empty() || c_values.empty() || alpha_values.empty() || k_values.empty() ||
        replicates == 0) {
        throw std::invalid_argument("study grid has an empty dimension");
    }
}

std::vector<StudyCell> StudyGrid::cells() const {
    std::vector<StudyCell> out;
    for (auto m : m_values) {
        for (auto c : c_values) {
            for (auto a : alpha_values) {
                for (auto k : k_values) out.push_back({m, c, a, k});
            }
        }
    }
    return out;
}

std::size_t StudyReport::failures() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const StudyRow& r) { return !r.ok; }));
}

double weight_msd(std::span<const double> estimate, std::span<const double> truth) {
    if (estimate.size() != truth.size() || truth.empty()) {
        throw std::invalid_argument("weight vectors differ in length");
    }
    const auto e = sorted_desc(estimate);
    const auto t = sorted_desc(truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += (e[i] - t[i]) * (e[i] - t[i]);
    return acc / static_cast<double>(t.size());
}

double alpha_abs_normalized_deviation(double estimate, double truth) {
    if (!(truth > 0.0)) throw std::invalid_argument("normalized deviation needs alpha > 0");
    return std::abs(estimate - truth) / truth;
}

StudyReport run_study(const StudyGrid& grid, const PriorSpec& priors, const McmcConfig& cfg,
                      const StudyOptions& options, const std::filesystem::path& out_dir) {
    grid.validate();
    priors.validate();
    cfg.validate();
    const auto cells = grid.cells();
    const std::size_t total = cells.size() * grid.replicates;

    StudyReport report;
    report.rows.resize(total);
    std::mutex progress_mutex;
    std::size_t done = 0;

    parallel_for(total, options.jobs, [&](std::size_t run) {
        const std::size_t cell_index = run / grid.replicates;
        const std::size_t rep = run % grid.replicates;
        const StudyCell& cell = cells[cell_index];
        StudyRow& row = report.rows[run];
        row.cell = cell;
        row.replicate = rep;

        const auto start = std::chrono::steady_clock::now();
        try {
            SimConfig sim_cfg;
            sim_cfg.m = cell.m;
            sim_cfg.coverage = cell.c;
            sim_cfg.k = cell.k;
            sim_cfg.alpha = cell.alpha;
            sim_cfg.nu = options.nu;
            sim_cfg.seed = derive_seed(options.seed, "simulate", cell_index, rep);
            sim_cfg.sample_id = "cell" + std::to_string(cell_index) + "_rep" + std::to_string(rep);
            const SimulatedSample sim = simulate_sample(sim_cfg);

            McmcConfig fit_cfg = cfg;
            fit_cfg.seed = derive_seed(options.seed, "fit", cell_index, rep);
            KRange range = options.k_range;
            range.lo = std::min(range.lo, cell.k);
            range.hi = std::max(range.hi, cell.k);
            SelectionOptions sel = options.selection;
            sel.jobs = 1;
            sel.keep_chains = false;
            const SelectionResult result =
                select_k(sim.data, sim.plaf, range, priors, fit_cfg, sel);

            const ModelScore* at_truth = result.find(cell.k, Restriction::full);
            if (at_truth == nullptr) throw InferenceError("no full fit at the true K");
            std::vector<double> w_hat;
            for (const auto& iv : at_truth->summary.weights) w_hat.push_back(iv.median);
            row.k_hat = result.selected_k();
            row.w_msd = weight_msd(w_hat, sim.truth.weights);
            row.alpha_and = alpha_abs_normalized_deviation(at_truth->summary.alpha.median,
                                                           cell.alpha);
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
            row.k_hat = 0;
            row.w_msd = kNaN;
            row.alpha_and = kNaN;
        }
        row.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        if (options.progress) {
            std::lock_guard lock(progress_mutex);
            options.progress(++done, total);
        }
    });

    report.aggregates = aggregate_study(report.rows);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream study(out_dir / "study.csv", std::ios::binary);
        write_study_csv(study, report.rows);
        std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
        write_study_summary_csv(summary, report.aggregates);
        if (!study || !summary) throw std::runtime_error("failed writing study outputs");
    }
    return report;
}

std::vector<StudyAggregate> aggregate_study(const std::vector<StudyRow>& rows) {
    std::vector<StudyAggregate> out;
    const auto same_cell = [](const StudyCell& a, const StudyCell& b) {
        return a.m == b.m && a.c == b.c && a.alpha == b.alpha && a.k == b.k;
    };
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        while (j < rows.size() && same_cell(rows[j].cell, rows[i].cell)) ++j;

        StudyAggregate agg;
        agg.cell = rows[i].cell;
        std::vector<double> k_hat;
        std::vector<double> msd;
        std::vector<double> and_;
        std::size_t correct = 0;
        for (std::size_t r = i; r < j; ++r) {
            if (!rows[r].ok) continue;
            k_hat.push_back(rows[r].k_hat);
            msd.push_back(rows[r].w_msd);
            and_.push_back(rows[r].alpha_and);
            correct += rows[r].k_hat == rows[r].cell.k;
        }
        agg.n_ok = k_hat.size();
        agg.frac_k_correct = agg.n_ok == 0 ? kNaN : static_cast<double>(correct) / agg.n_ok;
        agg.mean_k_hat = mean(k_hat);
        agg.mean_w_msd = mean(msd);
        agg.median_w_msd = median(msd);
        agg.mean_alpha_and = mean(and_);
        agg.median_alpha_and = median(and_);
        out.push_back(agg);
        i = j;
    }
    return out;
}

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
    out << "m,c,alpha,k_true,replicate,k_hat,w_msd,alpha_and,runtime_seconds,status\n";
    for (const auto& r : rows) {
        out << r.cell.m << ',' << r.cell.c << ',' << format_number(r.cell.alpha) << ','
            << r.cell.k << ',' << r.replicate << ',' << r.k_hat << ',' << format_number(r.w_msd)
            << ',' << format_number(r.alpha_and) << ',' << format_number(r.runtime_seconds) << ','
            << (r.ok ? "ok" : "failed") << '\n';
    }
}

void write_study_summary_csv(std::ostream& out, const std::vector<StudyAggregate>& aggregates) {
    out << "m,c,alpha,k_true,n_ok,frac_k_correct,mean_k_hat,mean_w_msd,median_w_msd,"
           "mean_alpha_and,median_alpha_and\n";
    for (const auto& a : aggregates) {
        out << a.cell.m << ',' << a.cell.c << ',' << format_number(a.cell.alpha) << ','
            << a.cell.k << ',' << a.n_ok << ',' << format_number(a.frac_k_correct) << ','
            << format_number(a.mean_k_hat) << ',' << format_number(a.mean_w_msd) << ','
            << format_number(a.median_w_msd) << ',' << format_number(a.mean_alpha_and) << ','
            << format_number(a.median_alpha_and) << '\n';
    }
}

}  // namespace strainmix
