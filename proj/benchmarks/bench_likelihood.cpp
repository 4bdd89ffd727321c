#include <benchmark/benchmark.h>

#include "strainmix/model.hpp"
#include "strainmix/simulator.hpp"

using namespace strainmix;

namespace {

SimulatedSample sample(int k, std::size_t m, std::uint32_t c) {
    SimConfig cfg;
    cfg.k = k;
    cfg.m = m;
    cfg.coverage = c;
    cfg.alpha = 0.05;
    cfg.seed = 42;
    return simulate_sample(cfg);
}

}  // namespace

static void BM_BetaBinomialLogPmf(benchmark::State& state) {
    const SnpCounts counts{140, 60};
    double q = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(beta_binomial_log_pmf(counts, q, 10.0));
        q = q < 0.9 ? q + 1e-7 : 0.3;
    }
}
BENCHMARK(BM_BetaBinomialLogPmf);

// One full-sample likelihood evaluation; items are SNP-band pairs.
static void BM_SampleLikelihood(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const auto sim = sample(k, m, 100);
    const SampleLikelihood lik(sim.data, sim.plaf);
    ModelParams p = sim.truth;
    for (auto _ : state) {
        p.nu = p.nu < 20.0 ? p.nu + 1e-6 : 10.0;
        benchmark::DoNotOptimize(lik(p));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m << k));
}
BENCHMARK(BM_SampleLikelihood)
    ->ArgsProduct({{1, 2, 3, 4, 5}, {500, 2500}})
    ->Unit(benchmark::kMicrosecond);

static void BM_SampleLikelihoodSetup(benchmark::State& state) {
    const auto sim = sample(2, static_cast<std::size_t>(state.range(0)), 100);
    for (auto _ : state) benchmark::DoNotOptimize(SampleLikelihood(sim.data, sim.plaf));
}
BENCHMARK(BM_SampleLikelihoodSetup)->Arg(2500)->Unit(benchmark::kMicrosecond);
