// Hot network paths: batched forward evaluation, fused loss+gradient, and
// the optimizer step.
#include "sblab/nn.hpp"
#include "sblab/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace sblab;

namespace {

struct Setup {
    Mlp net;
    std::vector<int> ks;
    std::vector<double> X, T, Y;

    Setup(int d, int hidden, int layers, int batch) {
        Rng rng(1);
        net = make_mlp(d, hidden, layers, 16, kActSilu, 32, rng);
        ks.resize(static_cast<size_t>(batch));
        X.resize(static_cast<size_t>(batch) * d);
        T.resize(static_cast<size_t>(batch) * d);
        Y.resize(static_cast<size_t>(batch) * d);
        Rng data(2);
        for (auto& k : ks) k = static_cast<int>(data.below(33));
        for (auto& v : X) v = data.normal();
        for (auto& v : T) v = data.normal();
    }
    int n() const { return static_cast<int>(ks.size()); }
};

void bm_forward(benchmark::State& state) {
    Setup s(2, static_cast<int>(state.range(0)), 6, static_cast<int>(state.range(1)));
    MlpWorkspace ws;
    for (auto _ : state) {
        mlp_forward(s.net, s.ks.data(), s.X.data(), s.n(), s.Y.data(), &ws);
        benchmark::DoNotOptimize(s.Y.data());
    }
    state.SetItemsProcessed(state.iterations() * s.n());
}
BENCHMARK(bm_forward)->Args({64, 128})->Args({128, 128})->Args({128, 512});

void bm_loss_and_grad(benchmark::State& state) {
    Setup s(2, static_cast<int>(state.range(0)), 6, static_cast<int>(state.range(1)));
    MlpGrads grads = make_grads(s.net);
    MlpWorkspace ws;
    for (auto _ : state) {
        grads.zero();
        const double loss = mse_grad(s.net, s.ks.data(), s.X.data(), s.n(),
                                     s.T.data(), grads, &ws);
        benchmark::DoNotOptimize(loss);
    }
    state.SetItemsProcessed(state.iterations() * s.n());
}
BENCHMARK(bm_loss_and_grad)->Args({64, 128})->Args({128, 128})->Args({128, 512});

void bm_adam_step(benchmark::State& state) {
    Setup s(2, static_cast<int>(state.range(0)), 6, 128);
    MlpGrads grads = make_grads(s.net);
    MlpWorkspace ws;
    mse_grad(s.net, s.ks.data(), s.X.data(), s.n(), s.T.data(), grads, &ws);
    AdamState adam = make_adam_state(s.net);
    for (auto _ : state) {
        adam_step(s.net, grads, adam, 1e-12); // tiny rate keeps weights finite
        benchmark::DoNotOptimize(s.net.W.data());
    }
    state.SetItemsProcessed(state.iterations() * s.net.n_params());
}
BENCHMARK(bm_adam_step)->Arg(64)->Arg(128);

} // namespace

BENCHMARK_MAIN();
