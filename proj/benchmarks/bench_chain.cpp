#include <benchmark/benchmark.h>

#include "strainmix/inference.hpp"
#include "strainmix/simulator.hpp"

using namespace strainmix;

// Cost per MCMC iteration (three block proposals) at fixed K.
static void BM_ChainIterations(benchmark::State& state) {
    SimConfig cfg;
    cfg.k = static_cast<int>(state.range(0));
    cfg.m = 500;
    cfg.coverage = 100;
    cfg.alpha = 0.05;
    cfg.seed = 9;
    const auto sim = simulate_sample(cfg);
    const SampleLikelihood lik(sim.data, sim.plaf);
    McmcConfig mc;
    mc.n_iterations = 200;
    mc.burn_in = 0;
    mc.thin = 10;
    for (auto _ : state) {
        mc.seed++;
        benchmark::DoNotOptimize(run_chain(lik, "bench", cfg.k, PriorSpec{}, mc));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mc.n_iterations));
}
BENCHMARK(BM_ChainIterations)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

static void BM_SimulateSample(benchmark::State& state) {
    SimConfig cfg;
    cfg.k = 3;
    cfg.m = static_cast<std::size_t>(state.range(0));
    cfg.coverage = 100;
    for (auto _ : state) {
        cfg.seed++;
        benchmark::DoNotOptimize(simulate_sample(cfg));
    }
}
BENCHMARK(BM_SimulateSample)->Arg(2500)->Unit(benchmark::kMicrosecond);
