#include "sblab/sgm_init.hpp"

#include "sblab/errors.hpp"

#include <algorithm>
#include <memory>
#include <vector>

namespace sblab {

PretrainedSgm pretrain_flow_sgm(const Sampler& src, const Sampler& dst,
                                const GammaSchedule& sched, const PretrainBudget& budget,
                                Rng& rng, SgmDirection direction, double* final_loss) {
    if (final_loss) *final_loss = 0.0;
    if (!sched.normalized())
        throw InvalidArgument("pretrain_flow_sgm: schedule must be normalized");
    if (src.d != dst.d)
        throw InvalidArgument("pretrain_flow_sgm: sampler dimensions differ");
    if (budget.steps < 0) throw InvalidArgument("pretrain_flow_sgm: negative train budget");
    if (budget.batch_size <= 0)
        throw InvalidArgument("pretrain_flow_sgm: batch size must be positive");
    if (!(budget.lr > 0.0)) throw InvalidArgument("pretrain_flow_sgm: lr must be positive");

    const int d = src.d;
    const int N = sched.n_steps();
    PretrainedSgm out;
    out.net = make_mlp(d, budget.arch, N, rng);
    out.direction = direction;
    out.schedule_hash = schedule_hash(sched);
    if (budget.steps == 0) return out;

    const int B = budget.batch_size;
    AdamState adam = make_adam_state(out.net);
    MlpGrads grads = make_grads(out.net);
    MlpWorkspace ws;
    std::vector<double> xs(static_cast<size_t>(B) * d), xd(static_cast<size_t>(B) * d);
    std::vector<double> X(static_cast<size_t>(B) * d), T(static_cast<size_t>(B) * d);
    std::vector<int> ks(static_cast<size_t>(B));

    const int tail = std::min(100, budget.steps);
    double tail_sum = 0.0;
    for (int step = 0; step < budget.steps; ++step) {
        draw(src, B, rng, xs.data());
        draw(dst, B, rng, xd.data());
        for (int i = 0; i < B; ++i) {
            const int k = static_cast<int>(rng.below(static_cast<uint64_t>(N + 1)));
            ks[static_cast<size_t>(i)] = k;
            const double gb = sched.gamma_bars[static_cast<size_t>(k)];
            for (int j = 0; j < d; ++j) {
                const size_t idx = static_cast<size_t>(i) * d + j;
                X[idx] = (1.0 - gb) * xs[idx] + gb * xd[idx];
                T[idx] = xs[idx] - xd[idx];
            }
        }
        grads.zero();
        const double loss = mse_grad(out.net, ks.data(), X.data(), B, T.data(), grads, &ws);
        adam_step(out.net, grads, adam, budget.lr);
        if (step >= budget.steps - tail) tail_sum += loss;
    }
    if (final_loss) *final_loss = tail_sum / tail;
    return out;
}

namespace {

// Shared wrapper body: out = x + coeff(k) * m(tstep(k), x).
MeanFn wrap_impl(const PretrainedSgm& sgm, const GammaSchedule& sched, bool forward) {
    auto net = std::make_shared<const Mlp>(sgm.net);
    auto gammas = std::make_shared<const std::vector<double>>(sched.gammas);
    const int d = net->d_in();
    const int N = sched.n_steps();
    MeanFn m;
    m.d = d;
    m.fn = [net, gammas, d, N, forward](const int* ks, const double* X, int n, double* out) {
        std::vector<int> tsteps(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int k = ks[i];
            if (forward) {
                if (k < 0 || k >= N) throw InvalidArgument("forward init wrapper: k out of range");
                tsteps[static_cast<size_t>(i)] = N - k;
            } else {
                if (k < 1 || k > N) throw InvalidArgument("backward init wrapper: k out of range");
                tsteps[static_cast<size_t>(i)] = k;
            }
        }
        std::vector<double> Y(static_cast<size_t>(n) * d);
        mlp_forward(*net, tsteps.data(), X, n, Y.data());
        for (int i = 0; i < n; ++i) {
            const int k = ks[i];
            const double g = forward ? (*gammas)[static_cast<size_t>(k)]
                                     : (*gammas)[static_cast<size_t>(k) - 1];
            for (int j = 0; j < d; ++j) {
                const size_t idx = static_cast<size_t>(i) * d + j;
                out[idx] = X[idx] + g * Y[idx];
            }
        }
    };
    return m;
}

} // namespace

MeanFn wrap_backward_init(const PretrainedSgm& sgm, const GammaSchedule& sched) {
    if (sgm.schedule_hash != schedule_hash(sched))
        throw InvalidArgument("wrap_backward_init: schedule does not match the pretrained net");
    if (sgm.direction != SgmDirection::DataDirected)
        throw InvalidArgument("wrap_backward_init: needs a data-directed flow");
    return wrap_impl(sgm, sched, false);
}

MeanFn wrap_forward_init(const PretrainedSgm& sgm, const GammaSchedule& sched) {
    if (sgm.schedule_hash != schedule_hash(sched))
        throw InvalidArgument("wrap_forward_init: schedule does not match the pretrained net");
    if (sgm.direction != SgmDirection::PriorDirected)
        throw InvalidArgument("wrap_forward_init: needs a prior-directed flow");
    return wrap_impl(sgm, sched, true);
}

MeanFn misaligned_init_control(const PretrainedSgm& sgm, const GammaSchedule& sched) {
    return wrap_impl(sgm, sched, false);
}

} // namespace sblab
