// Chain simulation and training-tuple extraction throughput.
#include "sblab/chain.hpp"
#include "sblab/datasets.hpp"
#include "sblab/nn.hpp"
#include "sblab/schedule.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace sblab;

namespace {

void bm_sample_forward(benchmark::State& state) {
    const int n_paths = static_cast<int>(state.range(0));
    const int n_steps = static_cast<int>(state.range(1));
    const int d = 2;
    const GammaSchedule sched = make_symmetric_schedule(n_steps, 1.0, 10.0, true);
    const Sampler data = shifted_gaussian({1.0, 1.0}, 1);
    Rng ends(3);
    const std::vector<double> x0 = draw(data, n_paths, ends);
    const MeanFn ref = reference_mean("brownian", d);
    Rng rng(4);
    for (auto _ : state) {
        TrajectoryBatch t = sample_forward(ref, sched, x0, rng);
        benchmark::DoNotOptimize(t.states.data());
    }
    state.SetItemsProcessed(state.iterations() * n_paths * n_steps);
}
BENCHMARK(bm_sample_forward)->Args({256, 16})->Args({1024, 16})->Args({1024, 64});

void bm_sample_forward_net(benchmark::State& state) {
    const int n_paths = static_cast<int>(state.range(0));
    const int d = 2;
    const GammaSchedule sched = make_symmetric_schedule(16, 1.0, 10.0, true);
    const Sampler data = shifted_gaussian({1.0, 1.0}, 1);
    Rng ends(3);
    const std::vector<double> x0 = draw(data, n_paths, ends);

    Rng net_rng(5);
    const Mlp net = make_mlp(d, 64, 6, 16, kActSilu, sched.n_steps(), net_rng);
    MeanFn mean;
    mean.d = d;
    mean.fn = [&net](const int* ks, const double* X, int n, double* out) {
        mlp_forward(net, ks, X, n, out);
    };
    Rng rng(6);
    for (auto _ : state) {
        TrajectoryBatch t = sample_forward(mean, sched, x0, rng);
        benchmark::DoNotOptimize(t.states.data());
    }
    state.SetItemsProcessed(state.iterations() * n_paths * sched.n_steps());
}
BENCHMARK(bm_sample_forward_net)->Arg(256)->Arg(1024);

void bm_subsample_pairs(benchmark::State& state) {
    const int d = 2;
    const GammaSchedule sched = make_symmetric_schedule(16, 1.0, 10.0, true);
    const Sampler data = shifted_gaussian({1.0, 1.0}, 1);
    Rng ends(3);
    const std::vector<double> x0 = draw(data, 1024, ends);
    const MeanFn ref = reference_mean("brownian", d);
    Rng rng(4);
    const TrajectoryBatch trajs = sample_forward(ref, sched, x0, rng);
    Rng pick(7);
    const int count = static_cast<int>(state.range(0));
    for (auto _ : state) {
        TupleBatch b = subsample_pairs(trajs, ObjectiveKind::Ipfm, sched, count, pick);
        benchmark::DoNotOptimize(b.inputs.data());
    }
    state.SetItemsProcessed(state.iterations() * count);
}
BENCHMARK(bm_subsample_pairs)->Arg(128)->Arg(1024);

} // namespace

BENCHMARK_MAIN();
