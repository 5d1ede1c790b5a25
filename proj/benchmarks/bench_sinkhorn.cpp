// Oracle costs: Sinkhorn iterations on the validation grid and the
// brute-force Gaussian conditioning used to cross-check the step posterior.
#include "sblab/oracle.hpp"
#include "sblab/schedule.hpp"

#include <benchmark/benchmark.h>

#include <utility>
#include <vector>

using namespace sblab;

namespace {

void bm_sinkhorn(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const std::vector<double> grid = linspace(-6.0, 6.0, n);
    const std::vector<double> hp = discretize_gaussian(1.0, 1.0, grid);
    const std::vector<double> hq = discretize_gaussian(-1.0, 1.0, grid);
    const std::vector<double> cost = quadratic_cost(grid, grid);
    for (auto _ : state) {
        DiscreteCoupling c = sinkhorn_coupling(hp, hq, cost, n, n, 2.0, 50, 0.0);
        benchmark::DoNotOptimize(c.joint.data());
    }
    state.SetItemsProcessed(state.iterations() * 50); // fixed iteration count
}
BENCHMARK(bm_sinkhorn)->Arg(101)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void bm_bruteforce_conditioning(benchmark::State& state) {
    const int n_steps = static_cast<int>(state.range(0));
    const GammaSchedule sched = make_symmetric_schedule(n_steps, 1.0, 3.0, true);
    const std::vector<std::pair<int, std::vector<double>>> pins = {
        {0, {1.0, 1.0}}, {n_steps, {-1.0, -1.0}}};
    for (auto _ : state) {
        PosteriorParams p = chain_conditioning_bruteforce(sched, n_steps / 2, pins);
        benchmark::DoNotOptimize(p.mean.data());
    }
}
BENCHMARK(bm_bruteforce_conditioning)->Arg(8)->Arg(16)->Arg(32);

} // namespace

BENCHMARK_MAIN();
