#pragma once

#include "sblab/chain.hpp"
#include "sblab/datasets.hpp"
#include "sblab/nn.hpp"
#include "sblab/schedule.hpp"

#include <cstdint>

namespace sblab {

// Which endpoint a pre-trained flow points at. A data-directed net was
// trained with src = data, dst = prior and predicts x_src - x_dst; a
// prior-directed net was trained with the roles swapped.
enum class SgmDirection { DataDirected, PriorDirected };

struct PretrainedSgm {
    Mlp net;
    SgmDirection direction = SgmDirection::DataDirected;
    uint64_t schedule_hash = 0;
};

struct PretrainBudget {
    int steps = 4000;
    int batch_size = 128;
    double lr = 1e-4;
    MlpArch arch;
};

// Trains m(k, x_k) -> (x_src - x_dst) by MSE on the deterministic
// interpolant x_k = (1 - gammabar_k) x_src + gammabar_k x_dst with
// independent endpoint draws per step. Requires a normalized schedule.
// steps == 0 returns the freshly initialized net; negative steps or a
// nonpositive batch size / learning rate are invalid arguments. `direction`
// records which endpoint the caller used as src. `final_loss`, when given,
// receives the mean training loss over the last min(100, steps) steps
// (0 when steps == 0).
PretrainedSgm pretrain_flow_sgm(const Sampler& src, const Sampler& dst,
                                const GammaSchedule& sched, const PretrainBudget& budget,
                                Rng& rng,
                                SgmDirection direction = SgmDirection::DataDirected,
                                double* final_loss = nullptr);

// Backward step-mean initialization from a data-directed flow:
// (k, x) |-> x + gamma_k * m(k, x). Queried at k in [1, N].
MeanFn wrap_backward_init(const PretrainedSgm& sgm, const GammaSchedule& sched);

// Forward step-mean initialization from a prior-directed flow:
// (k, x) |-> x + gamma_{k+1} * m(N - k, x); the timestep reversal aligns the
// second model's own time axis with the bridge's forward axis. Queried at
// k in [0, N-1].
MeanFn wrap_forward_init(const PretrainedSgm& sgm, const GammaSchedule& sched);

// Same map as wrap_backward_init, kept as a distinct entry point for the
// baseline whose targets evaluate the partner at both (k+1, x_{k+1}) and
// (k+1, x_k). Performs no compatibility checks.
MeanFn misaligned_init_control(const PretrainedSgm& sgm, const GammaSchedule& sched);

} // namespace sblab
