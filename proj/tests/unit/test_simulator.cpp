#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "strainmix/simulator.hpp"

using namespace strainmix;

TEST_CASE("evenly spaced PLAF clamps the last SNP") {
    const Plaf p = evenly_spaced_plaf(4);
    CHECK(p[0] == 0.25);
    CHECK(p[2] == 0.75);
    CHECK(p[3] == 1.0 - kFreqClamp);
}

TEST_CASE("simulate_sample is deterministic and canonical") {
    SimConfig cfg;
    cfg.k = 3;
    cfg.alpha = 0.1;
    cfg.m = 400;
    cfg.seed = 7;
    const auto a = simulate_sample(cfg);
    const auto b = simulate_sample(cfg);
    CHECK(a.data == b.data);
    CHECK(a.truth == b.truth);
    CHECK(a.truth.is_canonical());
    CHECK_NOTHROW(a.truth.validate());
    for (const auto& c : a.data.counts) REQUIRE(c.total() == cfg.coverage);
    cfg.seed = 8;
    CHECK_FALSE(simulate_sample(cfg).data == a.data);
}

TEST_CASE("unmixed samples sit near zero or full coverage") {
    SimConfig cfg;
    cfg.k = 1;
    cfg.alpha = 0.0;
    cfg.coverage = 100;
    cfg.m = 500;
    cfg.seed = 3;
    const auto sim = simulate_sample(cfg);
    std::size_t extreme = 0;
    for (const auto& c : sim.data.counts) extreme += c.nonref_reads <= 2 || c.nonref_reads >= 98;
    CHECK(extreme == sim.data.size());
}

TEST_CASE("two even strains put the middle bands near half coverage") {
    SimConfig cfg;
    cfg.k = 2;
    cfg.alpha = 0.0;
    cfg.nu = 1e7;
    cfg.coverage = 100;
    cfg.m = 2000;
    cfg.weights = std::vector<double>{0.5, 0.5};
    cfg.seed = 10;
    const auto sim = simulate_sample(cfg);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < sim.data.size(); ++j) {
        const auto mask = sim.band_of_snp[j];
        if (mask == 0b01 || mask == 0b10) {
            sum += sim.data.counts[j].nonref_reads;
            ++n;
            REQUIRE(std::abs(static_cast<double>(sim.data.counts[j].nonref_reads) - 50.0) < 25.0);
        }
    }
    REQUIRE(n > 100);
    CHECK(sum / n == doctest::Approx(50.0).epsilon(0.03));
}

TEST_CASE("band occupancy follows lambda_r(p)") {
    const int k = 3;
    const double p = 0.3;
    const std::size_t m = 100000;
    const Plaf plaf(std::vector<double>(m, p));
    const std::vector<std::uint32_t> coverage(m, 5);
    Rng rng(77);
    std::vector<std::uint32_t> bands;
    simulate_reads(ModelParams{3, {0.5, 0.3, 0.2}, 0.05, 10.0}, plaf, coverage, rng, "occ", &bands);
    std::vector<double> counts(8, 0.0);
    for (auto b : bands) counts[b] += 1.0;
    const auto lambda = band_weights(BandSet(k), p);
    for (std::size_t r = 0; r < 8; ++r) {
        const double se = std::sqrt(m * lambda[r] * (1.0 - lambda[r]));
        CHECK(std::abs(counts[r] - m * lambda[r]) <= 3.0 * se);
    }
}

TEST_CASE("truth out-scores relabeled and perturbed parameters") {
    int wins = 0;
    for (int rep = 0; rep < 100; ++rep) {
        SimConfig cfg;
        cfg.k = 3;
        cfg.alpha = 0.05;
        cfg.m = 500;
        cfg.coverage = 100;
        cfg.seed = 300 + rep;
        const auto sim = simulate_sample(cfg);
        ModelParams off = sim.truth;
        std::reverse(off.weights.begin(), off.weights.end());
        // The largest weight is at least 1/3, so this stays on the simplex.
        // At nu = 10 a W shift alone is within noise for roughly 1 in 10 seeds.
        off.weights[0] += 0.1;
        off.weights[2] -= 0.1;
        off.alpha += 0.05;
        wins += sample_log_likelihood(sim.data, sim.plaf, sim.truth) -
                    sample_log_likelihood(sim.data, sim.plaf, off) >=
                0.0;
    }
    CHECK(wins >= 95);
}

TEST_CASE("study grids") {
    const auto full = StudyGrid::full();
    CHECK(full.cells().size() == 96);
    CHECK(full.n_runs() == 960);
    CHECK(StudyGrid::smoke().n_runs() <= 24);

    StudyGrid empty;
    empty.k_values.clear();
    CHECK_THROWS(empty.validate());
}

TEST_CASE("study metrics") {
    CHECK(weight_msd(std::vector<double>{0.3, 0.7}, std::vector<double>{0.6, 0.4}) ==
          doctest::Approx(0.01));
    CHECK(alpha_abs_normalized_deviation(0.012, 0.01) == doctest::Approx(0.2));
    CHECK_THROWS(alpha_abs_normalized_deviation(0.1, 0.0));
}

TEST_CASE("run_study writes one row per run, failures included") {
    StudyGrid grid;
    grid.m_values = {60};
    grid.c_values = {30};
    grid.alpha_values = {0.1};
    grid.k_values = {1, 2};
    grid.replicates = 2;
    McmcConfig mc;
    mc.n_iterations = 300;
    mc.burn_in = 100;
    mc.thin = 2;
    StudyOptions opts;
    opts.k_range = {1, 2};
    opts.seed = 4;

    const auto dir = std::filesystem::temp_directory_path() / "strainmix_study_test";
    std::filesystem::remove_all(dir);
    const auto report = run_study(grid, PriorSpec{}, mc, opts, dir);
    CHECK(report.rows.size() == 4);
    CHECK(report.failures() == 0);
    CHECK(report.aggregates.size() == 2);

    std::ifstream in(dir / "study.csv");
    std::string line;
    std::size_t lines = 0;
    std::getline(in, line);
    CHECK(line == "m,c,alpha,k_true,replicate,k_hat,w_msd,alpha_and,runtime_seconds,status");
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 4);

    // K above the selectable maximum makes every run fail; rows still appear.
    opts.k_range = {1, kMaxSelectableK + 1};
    const auto failed = run_study(grid, PriorSpec{}, mc, opts);
    CHECK(failed.rows.size() == 4);
    CHECK(failed.failures() == 4);
    std::ostringstream csv;
    write_study_csv(csv, failed.rows);
    CHECK(csv.str().find(",failed\n") != std::string::npos);
    std::filesystem::remove_all(dir);
}
