// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "oracles.hpp"
#include "strainmix/parallel.hpp"
#include "strainmix/strainmix.hpp"
#include "strainmix_cli/cli.hpp"

using namespace strainmix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::size_t g_jobs = 1;

std::string fmt(double x, int digits = 4) {
    std::ostringstream s;
    s << std::setprecision(digits) << x;
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() /
               ("strainmix_accept_" + tag + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int cli_run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) std::cerr << "cli failed (" << code << "): " << err.str() << "\n";
    return code;
}

McmcConfig mcmc(std::size_t iterations, std::size_t burn_in, std::size_t thin, std::uint64_t seed) {
    McmcConfig c;
    c.n_iterations = iterations;
    c.burn_in = burn_in;
    c.thin = thin;
    c.seed = seed;
    return c;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. Beta(1, 1) mixing gives a uniform distribution over 0..T.
Outcome identity() {
    double worst = 0.0;
    for (std::uint32_t t = 1; t <= 50; ++t) {
        for (std::uint32_t n = 0; n <= t; ++n) {
            const double v = beta_binomial_log_pmf(SnpCounts{t - n, n}, 0.5, 2.0);
            worst = std::max(worst, std::abs(v + std::log(t + 1.0)));
        }
    }
    return {worst <= 1e-10, "max |err| " + fmt(worst)};
}

// 2. lambda sums to one.
Outcome normalization() {
    Rng rng(2);
    double worst = 0.0;
    for (int k = 1; k <= 7; ++k) {
        const BandSet bands(k);
        for (int i = 0; i < 1000; ++i) {
            const double p = sample_uniform(rng);
            const auto w = band_weights(bands, p);
            double s = 0.0;
            for (double x : w) s += x;
            worst = std::max(worst, std::abs(s - 1.0));
        }
    }
    return {worst <= 1e-12, "max |sum - 1| " + fmt(worst)};
}

// 3. alpha = 0 gives plain subset sums; K = 1 gives the panmixture pair.
Outcome reductions() {
    Rng rng(3);
    int bad = 0;
    for (int t = 0; t < 2000; ++t) {
        const int k = 1 + t % 5;
        const std::vector<double> conc(static_cast<std::size_t>(k), 1.0);
        ModelParams params{k, sample_dirichlet(rng, conc), 0.0, 5.0};
        const double p = sample_uniform(rng);
        const BandSet bands(k);
        const auto q = band_wsaf(bands, params, p);
        for (std::size_t r = 0; r < bands.size(); ++r) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) {
                if (r >> i & 1U) s += params.weights[static_cast<std::size_t>(i)];
            }
            bad += q[r] != std::min(s, 1.0);
        }

        const double alpha = sample_uniform(rng);
        const auto pan = band_wsaf(BandSet(1), ModelParams{1, {1.0}, alpha, 5.0}, p);
        bad += pan.size() != 2 || pan[0] != alpha * p || pan[1] != (1.0 - alpha) + alpha * p;
    }
    return {bad == 0, std::to_string(bad) + " mismatches in 2000 cases"};
}

// 4. Log-space mixture vs direct probabilities in long double.
Outcome oracle_equivalence() {
    Rng rng(4);
    double worst = 0.0;
    int non_finite = 0;
    for (int t = 0; t < 10000; ++t) {
        const int k = 1 + t % 3;
        const std::vector<double> conc(static_cast<std::size_t>(k), 1.0);
        auto weights = sample_dirichlet(rng, conc);
        const double alpha = sample_uniform(rng);
        const double nu = 0.05 + 50.0 * sample_uniform(rng);
        const double p = std::clamp(sample_uniform(rng), 1e-3, 1.0 - 1e-3);
        const auto total = static_cast<std::uint32_t>(1 + std::floor(100.0 * sample_uniform(rng)));
        const auto nonref = static_cast<std::uint32_t>(std::floor((total + 1) * sample_uniform(rng)));
        const double got = snp_log_likelihood(SnpCounts{total - std::min(nonref, total), std::min(nonref, total)},
                                              BandSet(k), ModelParams{k, weights, alpha, nu}.canonical(), p);
        const long double want = oracle::snp_likelihood(total - std::min(nonref, total), std::min(nonref, total),
                                                        weights, alpha, nu, p);
        if (!std::isfinite(got) || !(want > 0.0L)) {
            ++non_finite;
            continue;
        }
        worst = std::max(worst, std::abs(got - static_cast<double>(std::log(want))));
    }
    return {worst <= 1e-9 && non_finite == 0,
            "max |err| " + fmt(worst) + ", non-finite " + std::to_string(non_finite)};
}

// 5. MCMC marginals vs a quadrature posterior on (alpha, u = 1 - exp(-nu / 5)).
// Under the priors both coordinates are uniform, so the grid weight is the likelihood.
Outcome mcmc_vs_grid() {
    const SampleData data{"desk", {{2, 18}, {11, 9}, {17, 3}}};
    const std::vector<double> p{0.2, 0.5, 0.8};
    const PriorSpec priors;
    const double nu_mean = priors.nu_mean;

    constexpr int kGrid = 1000;
    constexpr int kBins = 20;
    std::vector<long double> like(static_cast<std::size_t>(kGrid) * kGrid);
    long double total = 0.0L;
    for (int i = 0; i < kGrid; ++i) {
        const double alpha = (i + 0.5) / kGrid;
        for (int j = 0; j < kGrid; ++j) {
            const double u = (j + 0.5) / kGrid;
            const double nu = -nu_mean * std::log1p(-u);
            long double l = 1.0L;
            for (std::size_t s = 0; s < 3; ++s) {
                l *= oracle::snp_likelihood(data.counts[s].ref_reads, data.counts[s].nonref_reads, {1.0}, alpha,
                                            nu, p[s]);
            }
            like[static_cast<std::size_t>(i) * kGrid + j] = l;
            total += l;
        }
    }
    std::vector<double> grid_alpha(kBins, 0.0), grid_u(kBins, 0.0);
    for (int i = 0; i < kGrid; ++i) {
        for (int j = 0; j < kGrid; ++j) {
            const auto w = static_cast<double>(like[static_cast<std::size_t>(i) * kGrid + j] / total);
            grid_alpha[static_cast<std::size_t>(i * kBins / kGrid)] += w;
            grid_u[static_cast<std::size_t>(j * kBins / kGrid)] += w;
        }
    }

    McmcConfig cfg = mcmc(200000, 2000, 1, 55);
    cfg.nu_lower_bound.reset();  // the grid covers the whole prior support
    const auto chain = run_chain(data, Plaf(p), 1, priors, cfg);
    std::vector<double> mc_alpha(kBins, 0.0), mc_u(kBins, 0.0);
    const double inv = 1.0 / static_cast<double>(chain.draws.size());
    for (const auto& d : chain.draws) {
        const double u = -std::expm1(-d.params.nu / nu_mean);
        mc_alpha[std::min(kBins - 1, static_cast<int>(d.params.alpha * kBins))] += inv;
        mc_u[std::min(kBins - 1, static_cast<int>(u * kBins))] += inv;
    }
    const auto tv = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
        return 0.5 * s;
    };
    const double tv_alpha = tv(grid_alpha, mc_alpha);
    const double tv_nu = tv(grid_u, mc_u);
    return {tv_alpha <= 0.05 && tv_nu <= 0.05, "TV alpha " + fmt(tv_alpha) + ", TV nu " + fmt(tv_nu) + " over " +
                                                   std::to_string(chain.draws.size()) + " draws"};
}

// 6. W accuracy improves with M; at M = 2500 every posterior-median weight is within 0.05.
Outcome recovery() {
    const std::vector<std::size_t> ms{50, 150, 500, 2500};
    constexpr std::size_t kReps = 10;
    std::vector<double> msd(ms.size() * kReps, 0.0);
    std::vector<double> worst_dev(kReps, 0.0);
    std::vector<std::string> at_2500(kReps);
    parallel_for(ms.size() * kReps, g_jobs, [&](std::size_t idx) {
        const std::size_t mi = idx / kReps;
        const std::size_t rep = idx % kReps;
        SimConfig sim;
        sim.k = 2;
        sim.alpha = 0.01;
        sim.coverage = 100;
        sim.m = ms[mi];
        sim.seed = derive_seed(606, "recovery", rep);  // same truth W across M
        sim.sample_id = "r" + std::to_string(rep);
        const auto s = simulate_sample(sim);
        const auto chain = run_chain(s.data, s.plaf, 2, PriorSpec{}, mcmc(5000, 1000, 4, derive_seed(6, "c", idx)));
        const auto summary = summarize(chain);
        std::vector<double> med;
        for (const auto& w : summary.weights) med.push_back(w.median);
        msd[idx] = weight_msd(med, s.truth.weights);
        if (mi + 1 == ms.size()) {
            for (std::size_t i = 0; i < med.size(); ++i) {
                worst_dev[rep] = std::max(worst_dev[rep], std::abs(med[i] - s.truth.weights[i]));
            }
            at_2500[rep] = "truth " + fmt(s.truth.weights[0], 3) + " est " + fmt(med[0], 3) + " alpha " +
                           fmt(summary.alpha.median, 3) + " nu " + fmt(summary.nu.median, 3);
        }
    });
    std::vector<double> medians;
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
        medians.push_back(median(std::vector<double>(msd.begin() + static_cast<long>(mi * kReps),
                                                     msd.begin() + static_cast<long>((mi + 1) * kReps))));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < medians.size(); ++i) monotone = monotone && medians[i] < medians[i - 1];
    const auto worst_it = std::max_element(worst_dev.begin(), worst_dev.end());
    const double worst = *worst_it;
    std::string detail = "median MSD";
    for (std::size_t i = 0; i < ms.size(); ++i) detail += " M=" + std::to_string(ms[i]) + ":" + fmt(medians[i], 3);
    detail += "; worst |W - truth| at M=2500 " + fmt(worst, 3) + " (" +
              at_2500[static_cast<std::size_t>(worst_it - worst_dev.begin())] + ")";
    return {monotone && worst <= 0.05, detail};
}

// 7. BIC K selection at K = 3, M = 2500, C = 250.
Outcome k_selection() {
    StudyGrid grid;
    grid.m_values = {2500};
    grid.c_values = {250};
    grid.alpha_values = {0.01, 0.5};
    grid.k_values = {3};
    grid.replicates = 10;
    StudyOptions opts;
    opts.k_range = {1, 4};
    opts.seed = 7;
    opts.jobs = g_jobs;
    const auto report = run_study(grid, PriorSpec{}, mcmc(3000, 1000, 2, 0), opts);
    int hits_low = 0;
    double sum_high = 0.0;
    int n_high = 0;
    std::string k_low, k_high;
    for (const auto& row : report.rows) {
        if (!row.ok) continue;
        if (row.cell.alpha == 0.01) {
            hits_low += row.k_hat == 3;
            k_low += std::to_string(row.k_hat);
        } else {
            sum_high += row.k_hat;
            ++n_high;
            k_high += std::to_string(row.k_hat);
        }
    }
    const double mean_high = n_high ? sum_high / n_high : 99.0;
    return {report.failures() == 0 && hits_low >= 8 && mean_high <= 3.0,
            "alpha=0.01: " + std::to_string(hits_low) + "/10 pick K=3 [" + k_low + "]; alpha=0.5: mean K " +
                fmt(mean_high, 3) + " [" + k_high + "]"};
}

// 8. compare on three simulated cohorts, through the command line.
Outcome restricted_models() {
    struct Cohort {
        int k;
        double alpha;
        std::string expect;
    };
    const std::vector<Cohort> cohorts{{3, 0.1, "full"}, {1, 0.1, "k_one"}, {3, 0.0, "alpha_zero"}};
    TempDir tmp("compare");
    bool pass = true;
    std::string detail;
    for (std::size_t c = 0; c < cohorts.size(); ++c) {
        const auto& co = cohorts[c];
        const auto sim = tmp.path / ("sim" + std::to_string(c));
        const auto cmp = tmp.path / ("cmp" + std::to_string(c));
        if (cli_run({"simulate", "--m", "500", "--c", "100", "--k", std::to_string(co.k), "--alpha",
                     fmt(co.alpha), "--n-samples", "20", "--seed", std::to_string(80 + c), "--out",
                     sim.string()}) != 0 ||
            cli_run({"compare", "--input", (sim / "counts.tsv").string(), "--plaf", (sim / "plaf.tsv").string(),
                     "--no-filter", "--k-range", "1..3", "--iterations", "2500", "--burn-in", "500", "--thin",
                     "2", "--seed", std::to_string(90 + c), "--jobs", std::to_string(g_jobs), "--out",
                     cmp.string()}) != 0) {
            return {false, "command failed for cohort " + std::to_string(c)};
        }
        const auto tally = nlohmann::json::parse(slurp(cmp / "comparison.json"))["tally"];
        const int wins = tally[co.expect].get<int>();
        pass = pass && wins > 10;
        if (!detail.empty()) detail += "; ";
        detail += "K=" + std::to_string(co.k) + " alpha=" + fmt(co.alpha) + ": " + co.expect + " " +
                  std::to_string(wins) + "/20 (full " + std::to_string(tally["full"].get<int>()) + ", alpha_zero " +
                  std::to_string(tally["alpha_zero"].get<int>()) + ", k_one " +
                  std::to_string(tally["k_one"].get<int>()) + ")";
    }
    return {pass, detail};
}

// study.csv with the runtime column blanked.
std::string study_csv_without_runtime(const fs::path& p) {
    std::ifstream in(p);
    std::string all;
    for (std::string line; std::getline(in, line);) {
        const auto last = line.rfind(',');
        const auto prev = line.rfind(',', last - 1);
        all += line.substr(0, prev) + line.substr(last) + "\n";
    }
    return all;
}

std::string manifest_without_timestamps(const fs::path& p) {
    auto j = nlohmann::json::parse(slurp(p));
    j.erase("started_at");
    j.erase("finished_at");
    return j.dump();
}

// 9. Same seed, same bytes.
Outcome determinism() {
    std::vector<std::string> failed;
    const auto check = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };

    SimConfig sim;
    sim.k = 2;
    sim.alpha = 0.1;
    sim.m = 300;
    sim.seed = 99;
    const auto s = simulate_sample(sim);
    check(simulate_sample(sim).data == s.data, "simulate_sample");
    const auto cfg = mcmc(1500, 300, 2, 17);
    const auto a = run_chain(s.data, s.plaf, 2, PriorSpec{}, cfg);
    const auto b = run_chain(s.data, s.plaf, 2, PriorSpec{}, cfg);
    std::ostringstream ca, cb;
    write_chain_csv(ca, a);
    write_chain_csv(cb, b);
    check(ca.str() == cb.str() && a.draws.size() == b.draws.size(), "chain csv");

    SelectionOptions serial;
    SelectionOptions threaded;
    threaded.jobs = 2;
    const auto r1 = select_k(s.data, s.plaf, {1, 3}, PriorSpec{}, cfg, serial);
    const auto r2 = select_k(s.data, s.plaf, {1, 3}, PriorSpec{}, cfg, threaded);
    bool same = r1.scores.size() == r2.scores.size() && r1.selected == r2.selected;
    for (std::size_t i = 0; same && i < r1.scores.size(); ++i) {
        same = r1.scores[i].bic == r2.scores[i].bic && r1.scores[i].hme_log_marginal == r2.scores[i].hme_log_marginal;
    }
    check(same, "select_k jobs 1 vs 2");

    TempDir tmp("determinism");
    // Same --out for both runs since the manifest records the command line.
    const auto simulate = [&](const std::string& name) {
        const int code = cli_run({"simulate", "--m", "200", "--k", "3", "--alpha", "0.05", "--n-samples", "3",
                                  "--seed", "31", "--out", (tmp.path / "s").string()});
        if (code == 0) fs::rename(tmp.path / "s", tmp.path / name);
        return code;
    };
    check(simulate("s1") == 0 && simulate("s2") == 0, "simulate command");
    for (const char* f : {"counts.tsv", "plaf.tsv", "truth.json"}) {
        check(slurp(tmp.path / "s1" / f) == slurp(tmp.path / "s2" / f), std::string("simulate ") + f);
    }
    check(manifest_without_timestamps(tmp.path / "s1" / "manifest.json") ==
              manifest_without_timestamps(tmp.path / "s2" / "manifest.json"),
          "simulate manifest");

    const auto fit = [&](const std::string& name, const std::string& jobs) {
        return cli_run({"fit", "--input", (tmp.path / "s1" / "counts.tsv").string(), "--plaf",
                        (tmp.path / "s1" / "plaf.tsv").string(), "--no-filter", "--k-range", "1..2", "--iterations",
                        "600", "--burn-in", "200", "--thin", "2", "--dump-chains", "--seed", "5", "--jobs", jobs,
                        "--out", (tmp.path / name).string()});
    };
    check(fit("f1", "1") == 0 && fit("f2", "2") == 0, "fit command");
    for (const auto& entry : fs::recursive_directory_iterator(tmp.path / "f1")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), tmp.path / "f1");
        if (rel == "manifest.json") continue;
        check(slurp(entry.path()) == slurp(tmp.path / "f2" / rel), "fit " + rel.string());
    }

    const auto study = [&](const std::string& name, const std::string& jobs) {
        return cli_run({"study", "--m-values", "60,120", "--c-values", "30", "--alpha-values", "0.1",
                        "--k-values", "1,2", "--replicates", "2", "--k-range", "1..3", "--iterations", "400",
                        "--burn-in", "100", "--thin", "2", "--seed", "12", "--jobs", jobs, "--out",
                        (tmp.path / name).string()});
    };
    check(study("t1", "1") == 0 && study("t2", "1") == 0 && study("t3", "2") == 0, "study command");
    for (const char* other : {"t2", "t3"}) {
        check(study_csv_without_runtime(tmp.path / "t1" / "study.csv") ==
                  study_csv_without_runtime(tmp.path / other / "study.csv"),
              std::string("study.csv vs ") + other);
        check(slurp(tmp.path / "t1" / "summary.csv") == slurp(tmp.path / other / "summary.csv"),
              std::string("summary.csv vs ") + other);
    }

    std::string detail = failed.empty() ? "chains, simulations, fits and study CSVs identical" : "differs:";
    for (const auto& f : failed) detail += " " + f;
    return {failed.empty(), detail};
}

// 10. hme never exceeds the best log-likelihood in the chain.
Outcome hme_bound() {
    std::size_t checked = 0;
    std::size_t violations = 0;
    int idx = 0;
    for (int k : {1, 2, 3}) {
        for (double alpha : {0.0, 0.05, 0.3}) {
            for (std::size_t m : {100, 400}) {
                SimConfig sim;
                sim.k = k;
                sim.alpha = alpha;
                sim.m = m;
                sim.coverage = 60;
                sim.seed = derive_seed(10, "hme", static_cast<std::uint64_t>(idx++));
                const auto s = simulate_sample(sim);
                SelectionOptions opts;
                opts.jobs = g_jobs;
                opts.keep_chains = true;
                const auto r = select_k(s.data, s.plaf, {1, 3}, PriorSpec{}, mcmc(800, 200, 2, 3), opts);
                for (std::size_t i = 0; i < r.scores.size(); ++i) {
                    ++checked;
                    const double hme = harmonic_mean_log_marginal(r.chains[i]);
                    violations += !(r.scores[i].hme_log_marginal <= r.scores[i].max_log_likelihood) ||
                                  !(hme <= max_observed_log_likelihood(r.chains[i]));
                }
            }
        }
    }
    return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checked) + " fits"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strainmix acceptance checks"};
    std::vector<int> which;
    app.add_option("--criterion,-c", which, "Criterion number (repeatable); default all")->check(CLI::Range(1, 10));
    app.add_option("--jobs,-j", g_jobs, "Worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
        {1, {"beta-binomial uniform identity", identity}},
        {2, {"band weight normalization", normalization}},
        {3, {"alpha = 0 and K = 1 reductions", reductions}},
        {4, {"direct-probability oracle", oracle_equivalence}},
        {5, {"MCMC vs grid posterior", mcmc_vs_grid}},
        {6, {"W recovery vs M", recovery}},
        {7, {"BIC K selection", k_selection}},
        {8, {"restricted-model discrimination", restricted_models}},
        {9, {"determinism", determinism}},
        {10, {"hme bound", hme_bound}},
    };
    if (which.empty()) {
        for (const auto& [n, _] : criteria) which.push_back(n);
    }

    bool all = true;
    for (int n : which) {
        const auto& [name, fn] = criteria.at(n);
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail << " ["
                  << fmt(secs, 3) << " s]" << std::endl;
    }
    return all ? 0 : 1;
}
