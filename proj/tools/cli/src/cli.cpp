#include "strainmix_cli/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "strainmix/parallel.hpp"
#include "strainmix/strainmix.hpp"
#include "strainmix_cli/figures.hpp"
#include "strainmix_cli/output.hpp"

namespace strainmix::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---- flag groups -----------------------------------------------------------

struct InputFlags {
    std::string input;
    std::string format = "auto";
};

struct FilterFlags {
    FilterConfig cfg;
    bool keep_missing = false;
    bool none = false;

    FilterConfig config() const {
        FilterConfig c = cfg;
        c.drop_missing = !keep_missing;
        return c;
    }
};

struct McmcFlags {
    std::size_t iterations = 10000;
    std::size_t burn_in = 2000;
    std::size_t thin = 5;
    double nu_min = 1.0;
    bool nu_unimodal = false;
    std::size_t jobs = 1;

    McmcConfig config(std::uint64_t seed) const {
        McmcConfig c;
        c.n_iterations = iterations;
        c.burn_in = burn_in;
        c.thin = thin;
        c.seed = seed;
        c.nu_unimodal = nu_unimodal;
        if (nu_min > 0.0) {
            c.nu_lower_bound = nu_min;
        } else {
            c.nu_lower_bound.reset();
        }
        c.validate();
        return c;
    }
};

struct SelectFlags {
    std::string k_range = "1..7";
    std::string selector = "bic";
    bool prior_odds = false;
};

void add_input(CLI::App* app, InputFlags& f) {
    app->add_option("--input,-i", f.input, "Read counts (TSV or JSON)")->required();
    app->add_option("--format", f.format, "Input format")
        ->check(CLI::IsMember({"auto", "tsv", "json"}))
        ->capture_default_str();
}

void add_filters(CLI::App* app, FilterFlags& f) {
    app->add_option("--min-maf", f.cfg.min_maf, "Drop SNPs with pooled MAF below this")
        ->capture_default_str();
    app->add_option("--max-low-coverage-snps", f.cfg.max_low_coverage_snps,
                    "Drop samples with more low-coverage SNPs than this")
        ->capture_default_str();
    app->add_option("--low-coverage-threshold", f.cfg.low_coverage_threshold,
                    "Reads below which a SNP counts as low coverage")
        ->capture_default_str();
    app->add_flag("--keep-missing", f.keep_missing, "Keep SNPs with zero reads in some sample");
    app->add_flag("--no-filter", f.none, "Use every sample and SNP as given");
}

void add_mcmc(CLI::App* app, McmcFlags& f) {
    app->add_option("--iterations", f.iterations, "MCMC iterations per chain")->capture_default_str();
    app->add_option("--burn-in", f.burn_in, "Iterations discarded")->capture_default_str();
    app->add_option("--thin", f.thin, "Keep every n-th iteration")->capture_default_str();
    app->add_option("--nu-min", f.nu_min, "Lower bound on nu (0 disables)")->capture_default_str();
    app->add_flag("--nu-unimodal", f.nu_unimodal, "Reject nu that makes an interior band bimodal");
    app->add_option("--jobs,-j", f.jobs, "Worker threads (0 = all cores)")->capture_default_str();
}

void add_select(CLI::App* app, SelectFlags& f) {
    app->add_option("--k-range", f.k_range, "K values to compare, e.g. 1..7")->capture_default_str();
    app->add_option("--selector", f.selector, "Model score")
        ->check(CLI::IsMember({"bic", "hme"}))
        ->capture_default_str();
    app->add_flag("--prior-odds", f.prior_odds, "Add the K prior to the hme score");
}

// ---- shared helpers --------------------------------------------------------

struct Context {
    std::vector<std::string> argv;
    std::ostream& out;
    std::ostream& err;
    std::optional<std::uint64_t> seed_flag;
    std::string out_dir;
    std::mutex log_mutex;

    std::uint64_t seed = 0;
    bool seed_from_entropy = false;

    void resolve_seed() {
        if (seed_flag) {
            seed = *seed_flag;
        } else {
            std::random_device rd;
            seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
            seed_from_entropy = true;
        }
    }

    void log(const std::string& line) {
        std::lock_guard lock(log_mutex);
        err << line << '\n';
    }

    Manifest manifest(std::string command) const {
        Manifest m;
        m.command = std::move(command);
        m.argv = argv;
        m.seed = seed;
        m.seed_from_entropy = seed_from_entropy;
        m.started_at = utc_timestamp();
        return m;
    }
};

void finish_manifest(OutputDir& dir, Manifest m) {
    m.finished_at = utc_timestamp();
    dir.write_text("manifest.json", manifest_json(m));
}

struct LoadedInput {
    Dataset raw;
    std::uint64_t digest = 0;
};

LoadedInput load_input(const InputFlags& f) {
    std::ifstream in(f.input, std::ios::binary);
    if (!in) throw InputError("cannot open input " + f.input);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    CountFormat format = CountFormat::tsv;
    if (f.format == "auto") {
        if (fs::path(f.input).extension() == ".json") format = CountFormat::json;
    } else {
        format = parse_count_format(f.format);
    }
    std::istringstream stream(text);
    LoadedInput loaded;
    loaded.raw = format == CountFormat::tsv ? parse_counts_tsv(stream) : parse_counts_json(stream);
    loaded.digest = fnv1a64(text);
    return loaded;
}

std::string filter_report_json(const FilterReport& r) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["samples_raw"] = r.samples_raw;
    j["snps_raw"] = r.snps_raw;
    j["samples_removed_low_coverage"] = r.samples_removed_low_coverage;
    j["snps_removed_missing"] = r.snps_removed_missing;
    j["snps_removed_maf"] = r.snps_removed_maf;
    j["snps_removed_no_variation"] = r.snps_removed_no_variation;
    j["samples_final"] = r.samples_final;
    j["snps_final"] = r.snps_final;
    return j.dump(2) + "\n";
}

struct Prepared {
    LoadedInput input;
    FilterResult filtered;
    Plaf plaf;
};

Prepared prepare(const InputFlags& in, const FilterFlags& filters, const std::string& plaf_path) {
    Prepared p{load_input(in), {}, {}};
    if (filters.none) {
        p.input.raw.validate();
        p.filtered.dataset = p.input.raw;
        auto& r = p.filtered.report;
        r.samples_raw = r.samples_final = p.input.raw.n_samples();
        r.snps_raw = r.snps_final = p.input.raw.n_snps();
    } else {
        p.filtered = apply_filters(p.input.raw, filters.config());
    }
    if (plaf_path.empty()) {
        p.plaf = compute_plaf(p.filtered.dataset);
    } else {
        std::ifstream pin(plaf_path);
        if (!pin) throw InputError("cannot open PLAF file " + plaf_path);
        p.plaf = read_plaf_tsv(pin, p.filtered.dataset.snp_ids);
    }
    return p;
}

json interval_json(const Interval& iv) {
    return json{{"median", iv.median}, {"lo", iv.lo}, {"hi", iv.hi}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string join(const std::vector<double>& values, char sep = ';') {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += sep;
        s += format_number(values[i]);
    }
    return s;
}

std::string num(double v) { return format_number(v); }

// One fitted sample: the reported model plus, for K selection, every score.
struct SampleFit {
    std::string sample_id;
    std::size_t n_snps = 0;
    ModelScore chosen;
    std::optional<SelectionResult> selection;
    std::vector<PosteriorChain> chains;
    double seconds = 0.0;
};

json sample_json(const SampleFit& f) {
    const auto& s = f.chosen.summary;
    json j;
    j["sample_id"] = f.sample_id;
    j["n_snps"] = f.n_snps;
    j["k"] = f.chosen.k;
    j["restriction"] = std::string(to_string(f.chosen.restriction));
    j["map"] = {{"alpha", s.map_params.alpha}, {"weights", s.map_params.weights}, {"nu", s.map_params.nu}};
    j["alpha"] = interval_json(s.alpha);
    json w = json::array();
    for (const auto& iv : s.weights) w.push_back(interval_json(iv));
    j["weights"] = w;
    j["nu"] = interval_json(s.nu);
    j["max_log_likelihood"] = f.chosen.max_log_likelihood;
    j["bic"] = f.chosen.bic;
    j["hme_log_marginal"] = f.chosen.hme_log_marginal;
    j["acceptance"] = {{"alpha", optional_json(f.chosen.acceptance.alpha)},
                       {"weights", optional_json(f.chosen.acceptance.weights)},
                       {"nu", optional_json(f.chosen.acceptance.nu)}};
    return j;
}

void write_summary_csv(std::ostream& out, const std::vector<SampleFit>& fits) {
    out << "sample_id,n_snps,k,restriction,alpha_median,alpha_lo,alpha_hi,nu_median,nu_lo,nu_hi,"
           "max_log_likelihood,bic,hme_log_marginal,weights_median,weights_lo,weights_hi\n";
    for (const auto& f : fits) {
        const auto& s = f.chosen.summary;
        std::vector<double> med;
        std::vector<double> lo;
        std::vector<double> hi;
        for (const auto& iv : s.weights) {
            med.push_back(iv.median);
            lo.push_back(iv.lo);
            hi.push_back(iv.hi);
        }
        out << f.sample_id << ',' << f.n_snps << ',' << f.chosen.k << ',' << to_string(f.chosen.restriction) << ','
            << num(s.alpha.median) << ',' << num(s.alpha.lo) << ',' << num(s.alpha.hi) << ',' << num(s.nu.median)
            << ',' << num(s.nu.lo) << ',' << num(s.nu.hi) << ',' << num(f.chosen.max_log_likelihood) << ','
            << num(f.chosen.bic) << ',' << num(f.chosen.hme_log_marginal) << ',' << join(med) << ',' << join(lo)
            << ',' << join(hi) << '\n';
    }
}

void write_selection_csv(std::ostream& out, const std::vector<SampleFit>& fits) {
    out << "sample_id,k,restriction,n_free_params,max_log_likelihood,bic,hme_log_marginal,log_k_prior,selected\n";
    for (const auto& f : fits) {
        if (!f.selection) continue;
        const auto& sel = *f.selection;
        for (std::size_t i = 0; i < sel.scores.size(); ++i) {
            const auto& s = sel.scores[i];
            out << f.sample_id << ',' << s.k << ',' << to_string(s.restriction) << ',' << s.n_free_params << ','
                << num(s.max_log_likelihood) << ',' << num(s.bic) << ',' << num(s.hme_log_marginal) << ','
                << num(s.log_k_prior) << ',' << (i == sel.selected ? 1 : 0) << '\n';
        }
    }
}

std::string selection_json(const std::vector<SampleFit>& fits, const SelectFlags& flags) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["selector"] = flags.selector;
    j["prior_odds"] = flags.prior_odds;
    json samples = json::array();
    for (const auto& f : fits) {
        if (!f.selection) continue;
        const auto& sel = *f.selection;
        json scores = json::array();
        for (const auto& s : sel.scores) {
            scores.push_back({{"k", s.k},
                              {"restriction", std::string(to_string(s.restriction))},
                              {"n_free_params", s.n_free_params},
                              {"max_log_likelihood", s.max_log_likelihood},
                              {"bic", s.bic},
                              {"hme_log_marginal", s.hme_log_marginal},
                              {"log_k_prior", s.log_k_prior}});
        }
        samples.push_back({{"sample_id", f.sample_id},
                           {"n_obs", sel.n_obs},
                           {"selected_k", sel.selected_k()},
                           {"selected_restriction", std::string(to_string(sel.selected_restriction()))},
                           {"scores", scores}});
    }
    j["samples"] = samples;
    return j.dump(2) + "\n";
}

// Distinct file stems for sample ids, even when sanitizing collides.
std::vector<std::string> file_stems(const std::vector<SampleFit>& fits) {
    std::vector<std::string> stems;
    std::set<std::string> used;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        std::string stem = safe_name(fits[i].sample_id);
        if (used.count(stem)) stem += "_" + std::to_string(i + 1);
        used.insert(stem);
        stems.push_back(stem);
    }
    return stems;
}

Selector parse_selector(const std::string& s) { return s == "hme" ? Selector::hme : Selector::bic; }

// Fits every sample. With fixed_k set, runs one full-model chain per sample;
// otherwise selects K over the range. Samples run in parallel when there are
// at least as many samples as workers, otherwise the chains of one sample do.
std::vector<SampleFit> fit_samples(Context& ctx, const Prepared& prep, std::optional<int> fixed_k,
                                   const SelectFlags& sel_flags, const McmcFlags& mc_flags,
                                   bool include_restricted, bool keep_chains) {
    const auto& samples = prep.filtered.dataset.samples;
    const McmcConfig mc = mc_flags.config(ctx.seed);
    const PriorSpec priors;
    const KRange range = parse_k_range(sel_flags.k_range);
    std::size_t jobs = mc_flags.jobs;
    if (jobs == 0) jobs = std::max(1U, std::thread::hardware_concurrency());
    const bool across_samples = samples.size() >= jobs;

    SelectionOptions opts;
    opts.selector = parse_selector(sel_flags.selector);
    opts.prior_odds = sel_flags.prior_odds;
    opts.include_restricted = include_restricted;
    opts.keep_chains = keep_chains;
    opts.jobs = across_samples ? 1 : jobs;

    std::vector<SampleFit> fits(samples.size());
    std::atomic<std::size_t> done{0};
    parallel_for(samples.size(), across_samples ? jobs : 1, [&](std::size_t i) {
        const auto start = std::chrono::steady_clock::now();
        const SampleData& data = samples[i];
        SampleFit& fit = fits[i];
        fit.sample_id = data.sample_id;
        fit.n_snps = data.size();
        if (fixed_k) {
            PosteriorChain chain;
            try {
                chain = run_chain(data, prep.plaf, *fixed_k, priors, mc);
            } catch (const InferenceError& e) {
                throw InferenceError("sample '" + data.sample_id + "': " + e.what());
            }
            fit.chosen = score_chain(chain, data.size(), priors);
            if (keep_chains) fit.chains.push_back(std::move(chain));
        } else {
            SelectionResult sel = select_k(data, prep.plaf, range, priors, mc, opts);
            fit.chosen = sel.selected_score();
            fit.chains = std::move(sel.chains);
            sel.chains.clear();
            fit.selection = std::move(sel);
        }
        fit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ostringstream line;
        line << '[' << ++done << '/' << samples.size() << "] " << data.sample_id << ": K=" << fit.chosen.k << " ("
             << to_string(fit.chosen.restriction) << ") BIC=" << num(fit.chosen.bic) << " in " << fit.seconds
             << " s";
        ctx.log(line.str());
    });
    return fits;
}

void write_chains(OutputDir& dir, const std::vector<SampleFit>& fits, const std::vector<std::string>& stems) {
    for (std::size_t i = 0; i < fits.size(); ++i) {
        for (const auto& chain : fits[i].chains) {
            const std::string name = stems[i] + "_k" + std::to_string(chain.k) + "_" +
                                     std::string(to_string(chain.restriction)) + ".csv";
            dir.write(fs::path("chains") / name, [&](std::ostream& o) { write_chain_csv(o, chain); });
        }
    }
}

// ---- commands --------------------------------------------------------------

struct FitFlags {
    InputFlags input;
    FilterFlags filters;
    McmcFlags mcmc;
    SelectFlags select;
    std::string k = "auto";
    std::string plaf;
    bool dump_chains = false;
    bool svg = false;
};

int cmd_fit(Context& ctx, const FitFlags& f) {
    std::optional<int> fixed_k;
    if (f.k != "auto") {
        try {
            std::size_t used = 0;
            fixed_k = std::stoi(f.k, &used);
            if (used != f.k.size() || *fixed_k < 1 || *fixed_k > kMaxSelectableK) throw std::invalid_argument(f.k);
        } catch (const std::logic_error&) {
            throw InputError("--k must be 'auto' or an integer in 1.." + std::to_string(kMaxSelectableK));
        }
    }
    ctx.resolve_seed();
    Manifest manifest = ctx.manifest("fit");
    OutputDir dir(ctx.out_dir);
    const Prepared prep = prepare(f.input, f.filters, f.plaf);
    manifest.input = f.input.input;
    manifest.input_digest = prep.input.digest;
    ctx.log("fit: " + std::to_string(prep.filtered.dataset.n_samples()) + " samples, " +
            std::to_string(prep.filtered.dataset.n_snps()) + " SNPs after filtering");

    const auto fits = fit_samples(ctx, prep, fixed_k, f.select, f.mcmc, true, f.dump_chains);
    const auto stems = file_stems(fits);

    json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["samples"] = json::array();
    for (const auto& fit : fits) summary["samples"].push_back(sample_json(fit));
    dir.write_text("summary.json", summary.dump(2) + "\n");
    dir.write("summary.csv", [&](std::ostream& o) { write_summary_csv(o, fits); });
    if (!fixed_k) {
        dir.write_text("selection.json", selection_json(fits, f.select));
        dir.write("selection.csv", [&](std::ostream& o) { write_selection_csv(o, fits); });
    }
    if (f.dump_chains) write_chains(dir, fits, stems);

    const auto& ds = prep.filtered.dataset;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto fig =
            build_wsaf_figure(ds.samples[i], ds.snp_ids, prep.plaf, fits[i].chosen.summary.map_params, ctx.seed);
        dir.write(fs::path("figures") / (stems[i] + "_wsaf.csv"), [&](std::ostream& o) { write_wsaf_csv(o, fig); });
        if (f.svg) {
            dir.write(fs::path("figures") / (stems[i] + "_wsaf.svg"),
                      [&](std::ostream& o) { write_wsaf_svg(o, fig); });
        }
    }
    dir.write_text("filter_report.json", filter_report_json(prep.filtered.report));
    dir.write("plaf.tsv", [&](std::ostream& o) { write_plaf_tsv(o, ds.snp_ids, prep.plaf); });
    finish_manifest(dir, std::move(manifest));
    dir.commit();
    ctx.out << "wrote " << ctx.out_dir << '\n';
    return kExitOk;
}

struct CompareFlags {
    InputFlags input;
    FilterFlags filters;
    McmcFlags mcmc;
    std::string k_range = "1..7";
    std::string plaf;
    bool dump_chains = false;
};

int cmd_compare(Context& ctx, const CompareFlags& f) {
    ctx.resolve_seed();
    Manifest manifest = ctx.manifest("compare");
    OutputDir dir(ctx.out_dir);
    const Prepared prep = prepare(f.input, f.filters, f.plaf);
    manifest.input = f.input.input;
    manifest.input_digest = prep.input.digest;

    SelectFlags select;
    select.k_range = f.k_range;
    const auto fits = fit_samples(ctx, prep, std::nullopt, select, f.mcmc, true, f.dump_chains);

    const Restriction kinds[] = {Restriction::full, Restriction::alpha_zero, Restriction::k_one};
    std::map<Restriction, std::size_t> tally;
    double sum_az = 0.0;
    double sum_k1 = 0.0;
    json rows = json::array();
    std::ostringstream csv;
    csv << "sample_id,winner,k_full,bic_full,k_alpha_zero,bic_alpha_zero,bic_k_one,"
           "delta_bic_alpha_zero,delta_bic_k_one\n";
    for (const auto& fit : fits) {
        const auto& sel = *fit.selection;
        const ModelScore* best[3];
        for (int r = 0; r < 3; ++r) best[r] = sel.best_of(kinds[r]);
        // The winner is the overall BIC choice; restricted labels win ties.
        const Restriction winner = sel.selected_restriction();
        ++tally[winner];
        const double d_az = best[1]->bic - best[0]->bic;
        const double d_k1 = best[2]->bic - best[0]->bic;
        sum_az += d_az;
        sum_k1 += d_k1;
        csv << fit.sample_id << ',' << to_string(winner) << ',' << best[0]->k << ',' << num(best[0]->bic) << ','
            << best[1]->k << ',' << num(best[1]->bic) << ',' << num(best[2]->bic) << ',' << num(d_az) << ','
            << num(d_k1) << '\n';
        rows.push_back({{"sample_id", fit.sample_id},
                        {"winner", std::string(to_string(winner))},
                        {"full", {{"k", best[0]->k}, {"bic", best[0]->bic}}},
                        {"alpha_zero", {{"k", best[1]->k}, {"bic", best[1]->bic}}},
                        {"k_one", {{"k", 1}, {"bic", best[2]->bic}}}});
    }
    json j;
    j["schema_version"] = kSchemaVersion;
    j["n_samples"] = fits.size();
    j["tally"] = {{"full", tally[Restriction::full]},
                  {"alpha_zero", tally[Restriction::alpha_zero]},
                  {"k_one", tally[Restriction::k_one]}};
    j["sum_delta_bic"] = {{"alpha_zero_minus_full", sum_az}, {"k_one_minus_full", sum_k1}};
    j["samples"] = rows;
    dir.write_text("comparison.json", j.dump(2) + "\n");
    dir.write_text("comparison.csv", csv.str());
    dir.write("selection.csv", [&](std::ostream& o) { write_selection_csv(o, fits); });
    if (f.dump_chains) write_chains(dir, fits, file_stems(fits));
    dir.write_text("filter_report.json", filter_report_json(prep.filtered.report));
    finish_manifest(dir, std::move(manifest));
    dir.commit();
    ctx.out << "full " << tally[Restriction::full] << ", alpha_zero " << tally[Restriction::alpha_zero]
            << ", k_one " << tally[Restriction::k_one] << '\n';
    return kExitOk;
}

struct SimulateFlags {
    std::size_t m = 500;
    std::uint32_t coverage = 100;
    int k = 1;
    double alpha = 0.01;
    double nu = 10.0;
    std::vector<double> weights;
    std::size_t n_samples = 1;
    std::string prefix = "sim";
    std::string format = "tsv";
};

int cmd_simulate(Context& ctx, const SimulateFlags& f) {
    ctx.resolve_seed();
    Manifest manifest = ctx.manifest("simulate");
    if (f.n_samples == 0) throw InputError("--n-samples must be positive");
    OutputDir dir(ctx.out_dir);

    Dataset ds;
    const std::size_t width = std::to_string(f.m).size();
    for (std::size_t j = 1; j <= f.m; ++j) {
        std::string id = std::to_string(j);
        ds.snp_ids.push_back("snp" + std::string(width - id.size(), '0') + id);
    }
    std::vector<TruthRecord> truth;
    std::optional<Plaf> plaf;
    for (std::size_t i = 0; i < f.n_samples; ++i) {
        SimConfig cfg;
        cfg.m = f.m;
        cfg.coverage = f.coverage;
        cfg.k = f.k;
        cfg.alpha = f.alpha;
        cfg.nu = f.nu;
        if (!f.weights.empty()) cfg.weights = f.weights;
        cfg.seed = derive_seed(ctx.seed, "simulate", i);
        cfg.sample_id = f.prefix + std::to_string(i + 1);
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        auto sim = simulate_sample(cfg);
        truth.push_back({cfg.sample_id, sim.truth, cfg.m, cfg.coverage});
        ds.samples.push_back(std::move(sim.data));
        if (!plaf) plaf = std::move(sim.plaf);
    }

    if (f.format == "json") {
        dir.write("counts.json", [&](std::ostream& o) { write_counts_json(o, ds); });
    } else {
        dir.write("counts.tsv", [&](std::ostream& o) { write_counts_tsv(o, ds); });
    }
    dir.write("plaf.tsv", [&](std::ostream& o) { write_plaf_tsv(o, ds.snp_ids, *plaf); });
    dir.write_text("truth.json", truth_json(truth));
    finish_manifest(dir, std::move(manifest));
    dir.commit();
    ctx.out << "wrote " << f.n_samples << " samples x " << f.m << " SNPs to " << ctx.out_dir << '\n';
    return kExitOk;
}

struct StudyFlags {
    McmcFlags mcmc;
    SelectFlags select;
    std::string scale = "full";
    std::vector<std::size_t> m_values;
    std::vector<std::uint32_t> c_values;
    std::vector<double> alpha_values;
    std::vector<int> k_values;
    std::optional<std::size_t> replicates;
    double nu = 10.0;
};

int cmd_study(Context& ctx, StudyFlags f) {
    ctx.resolve_seed();
    Manifest manifest = ctx.manifest("study");
    StudyGrid grid = f.scale == "smoke" ? StudyGrid::smoke() : StudyGrid::full();
    if (!f.m_values.empty()) grid.m_values = f.m_values;
    if (!f.c_values.empty()) grid.c_values = f.c_values;
    if (!f.alpha_values.empty()) grid.alpha_values = f.alpha_values;
    if (!f.k_values.empty()) grid.k_values = f.k_values;
    if (f.replicates) grid.replicates = *f.replicates;
    try {
        grid.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    OutputDir dir(ctx.out_dir);

    StudyOptions opts;
    opts.k_range = parse_k_range(f.select.k_range);
    opts.selection.selector = parse_selector(f.select.selector);
    opts.selection.prior_odds = f.select.prior_odds;
    opts.nu = f.nu;
    opts.seed = ctx.seed;
    opts.jobs = f.mcmc.jobs;
    opts.progress = [&](std::size_t done, std::size_t total) {
        ctx.log("study: " + std::to_string(done) + "/" + std::to_string(total) + " runs");
    };
    ctx.log("study: " + std::to_string(grid.n_runs()) + " runs");
    const auto report = run_study(grid, PriorSpec{}, f.mcmc.config(ctx.seed), opts, dir.path(""));
    finish_manifest(dir, std::move(manifest));
    dir.commit();

    const std::size_t failed = report.failures();
    ctx.out << report.rows.size() - failed << " runs ok, " << failed << " failed; wrote " << ctx.out_dir << '\n';
    for (const auto& row : report.rows) {
        if (!row.ok) {
            ctx.log("failed: m=" + std::to_string(row.cell.m) + " c=" + std::to_string(row.cell.c) +
                    " alpha=" + num(row.cell.alpha) + " k=" + std::to_string(row.cell.k) +
                    " replicate=" + std::to_string(row.replicate) + ": " + row.error);
        }
    }
    if (failed == 0) return kExitOk;
    return failed == report.rows.size() ? kExitInference : kExitPartial;
}

struct PlafFlags {
    InputFlags input;
    FilterFlags filters;
};

int cmd_plaf(Context& ctx, const PlafFlags& f) {
    ctx.seed_flag = ctx.seed_flag.value_or(0);
    ctx.resolve_seed();
    Manifest manifest = ctx.manifest("plaf");
    OutputDir dir(ctx.out_dir);
    const Prepared prep = prepare(f.input, f.filters, "");
    manifest.input = f.input.input;
    manifest.input_digest = prep.input.digest;
    dir.write("plaf.tsv", [&](std::ostream& o) { write_plaf_tsv(o, prep.filtered.dataset.snp_ids, prep.plaf); });
    dir.write_text("filter_report.json", filter_report_json(prep.filtered.report));
    finish_manifest(dir, std::move(manifest));
    dir.commit();
    ctx.out << "wrote PLAF for " << prep.plaf.size() << " SNPs to " << ctx.out_dir << '\n';
    return kExitOk;
}

}  // namespace

// ---- truth records ---------------------------------------------------------

std::string truth_json(const std::vector<TruthRecord>& records) {
    json j;
    j["schema_version"] = kSchemaVersion;
    json samples = json::array();
    for (const auto& r : records) {
        samples.push_back({{"sample_id", r.sample_id},
                           {"m", r.m},
                           {"coverage", r.coverage},
                           {"k", r.params.k},
                           {"alpha", r.params.alpha},
                           {"nu", r.params.nu},
                           {"weights", r.params.weights}});
    }
    j["samples"] = samples;
    return j.dump(2) + "\n";
}

std::vector<TruthRecord> parse_truth_json(std::istream& in) {
    std::vector<TruthRecord> out;
    try {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& s : doc.at("samples")) {
            TruthRecord r;
            r.sample_id = s.at("sample_id").get<std::string>();
            r.m = s.at("m").get<std::size_t>();
            r.coverage = s.at("coverage").get<std::uint32_t>();
            r.params.k = s.at("k").get<int>();
            r.params.alpha = s.at("alpha").get<double>();
            r.params.nu = s.at("nu").get<double>();
            r.params.weights = s.at("weights").get<std::vector<double>>();
            r.params.validate();
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("truth JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("truth JSON: ") + e.what());
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Strain mixture inference from allele read counts", "strainmix"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::vector<std::string> argv{"strainmix"};
    argv.insert(argv.end(), args.begin(), args.end());
    Context ctx{argv, out, err, std::nullopt, {}, {}};

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out,-o", ctx.out_dir, "Output directory (must be new or empty)")->required();
        sub->add_option("--seed", ctx.seed_flag, "Top-level random seed (default: system entropy)");
    };

    FitFlags fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit samples and select K");
    add_common(fit_cmd);
    add_input(fit_cmd, fit.input);
    add_filters(fit_cmd, fit.filters);
    add_mcmc(fit_cmd, fit.mcmc);
    add_select(fit_cmd, fit.select);
    fit_cmd->add_option("--k", fit.k, "Number of strains, or auto")->capture_default_str();
    fit_cmd->add_option("--plaf", fit.plaf, "PLAF TSV to use instead of pooling the input");
    fit_cmd->add_flag("--dump-chains", fit.dump_chains, "Write every posterior chain as CSV");
    fit_cmd->add_flag("--svg", fit.svg, "Also draw each WSAF figure as SVG");

    SimulateFlags sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate read counts from the model");
    add_common(sim_cmd);
    sim_cmd->add_option("--m", sim.m, "SNPs per sample")->capture_default_str();
    sim_cmd->add_option("--c,--coverage", sim.coverage, "Reads per SNP")->capture_default_str();
    sim_cmd->add_option("--k", sim.k, "Strains")->capture_default_str();
    sim_cmd->add_option("--alpha", sim.alpha, "Panmixia coefficient")->capture_default_str();
    sim_cmd->add_option("--nu", sim.nu, "Beta-binomial shape")->capture_default_str();
    sim_cmd->add_option("--weights", sim.weights, "Strain weights (default: Dirichlet draw)")->delimiter(',');
    sim_cmd->add_option("--n-samples", sim.n_samples, "Samples in the cohort")->capture_default_str();
    sim_cmd->add_option("--sample-prefix", sim.prefix, "Sample id prefix")->capture_default_str();
    sim_cmd->add_option("--format", sim.format, "Counts format")
        ->check(CLI::IsMember({"tsv", "json"}))
        ->capture_default_str();

    StudyFlags study;
    auto* study_cmd = app.add_subcommand("study", "Run the simulation study grid");
    add_common(study_cmd);
    add_mcmc(study_cmd, study.mcmc);
    study.select.k_range = "1..5";
    add_select(study_cmd, study.select);
    study_cmd->add_option("--scale", study.scale, "Grid preset")
        ->check(CLI::IsMember({"full", "smoke"}))
        ->capture_default_str();
    study_cmd->add_option("--m-values", study.m_values, "Override SNP counts")->delimiter(',');
    study_cmd->add_option("--c-values", study.c_values, "Override coverages")->delimiter(',');
    study_cmd->add_option("--alpha-values", study.alpha_values, "Override alphas")->delimiter(',');
    study_cmd->add_option("--k-values", study.k_values, "Override true K values")->delimiter(',');
    study_cmd->add_option("--replicates", study.replicates, "Override replicates per cell");
    study_cmd->add_option("--nu", study.nu, "Simulation nu")->capture_default_str();

    CompareFlags cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Compare full, alpha_zero and k_one models by BIC");
    add_common(cmp_cmd);
    add_input(cmp_cmd, cmp.input);
    add_filters(cmp_cmd, cmp.filters);
    add_mcmc(cmp_cmd, cmp.mcmc);
    cmp_cmd->add_option("--k-range", cmp.k_range, "K values to compare")->capture_default_str();
    cmp_cmd->add_option("--plaf", cmp.plaf, "PLAF TSV to use instead of pooling the input");
    cmp_cmd->add_flag("--dump-chains", cmp.dump_chains, "Write every posterior chain as CSV");

    PlafFlags plaf;
    auto* plaf_cmd = app.add_subcommand("plaf", "Filter the input and write pooled PLAF");
    add_common(plaf_cmd);
    add_input(plaf_cmd, plaf.input);
    add_filters(plaf_cmd, plaf.filters);

    try {
        std::vector<const char*> raw;
        for (const auto& a : argv) raw.push_back(a.c_str());
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*fit_cmd) return cmd_fit(ctx, fit);
        if (*sim_cmd) return cmd_simulate(ctx, sim);
        if (*study_cmd) return cmd_study(ctx, study);
        if (*cmp_cmd) return cmd_compare(ctx, cmp);
        if (*plaf_cmd) return cmd_plaf(ctx, plaf);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InferenceError& e) {
        err << "inference error: " << e.what() << '\n';
        return kExitInference;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInference;
    }
    return kExitInput;
}

}  // namespace strainmix::cli
