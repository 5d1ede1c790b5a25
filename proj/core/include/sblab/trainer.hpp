#pragma once

#include "sblab/chain.hpp"
#include "sblab/datasets.hpp"
#include "sblab/nn.hpp"
#include "sblab/objectives.hpp"
#include "sblab/schedule.hpp"
#include "sblab/sgm_init.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sblab {

// Which nets start from pretrained flow weights.
enum class InitMode { Random, BackwardOnly, Dual };
const char* init_mode_name(InitMode m);
InitMode init_mode_from_name(const std::string& name);

// One direction of the bridge: the raw net plus the head that turns the
// net output into the objective's prediction,
//   prediction(q, x) = head_skip(q) * x + head_coeff(q) * net(net_tstep(q), x),
// and the map from that prediction to the chain step mean. q is the query
// index of the state fed in: a backward model steps x_q -> x_{q-1}
// (q in [1, N]), a forward model steps x_q -> x_{q+1} (q in [0, N-1]).
struct BridgeModel {
    Mlp net;
    Direction dir = Direction::Backward;
    ObjectiveKind obj = ObjectiveKind::Ipfm;
    bool sgm_wrapped = false; // net carries pretrained flow weights
    GammaSchedule sched;

    double head_skip(int q) const;
    double head_coeff(int q) const;
    int net_tstep(int q) const;

    // Step-mean map; snapshots the current weights.
    MeanFn mean_fn() const;
};

struct TrainConfig {
    ObjectiveKind objective = ObjectiveKind::Ipfm;
    InitMode init = InitMode::Random;
    int epochs = 3;          // L: pairs of half-epochs
    int steps_per_half = 5000;
    int batch_size = 128;
    double lr = 1e-4;
    int cache_paths = 1500;  // trajectories per cache build
    int cache_refresh = 1000; // optimizer steps between cache rebuilds
    MlpArch arch;
    uint64_t seed = 1;
    int threads = 1;

    // Optional plateau stop: end the half-epoch early when the windowed
    // mean loss improves by less than plateau_rel relatively.
    bool early_stop = false;
    double plateau_rel = 1e-4;
    int plateau_window = 500;

    // Evaluation, on common random numbers across half-epochs.
    int eval_paths = 4000;
    int eval_times = 5;
    uint64_t eval_seed = 0x5b1ab5eedULL;
    std::vector<double> oracle_a; // nonempty: averaged KL vs the analytic bridge

    // Persistence. Empty run_dir writes nothing.
    std::string run_dir;
    std::string config_hash;  // embedded in metrics.csv
    bool resume = false;      // continue from run_dir's last complete half
    int stop_after_halves = 0; // 0 = run all 2*epochs halves
};

struct HalfEpochRecord {
    int half_epoch = 0;   // 1-based; odd halves train F, even halves train B
    double loss = 0.0;    // mean training loss across the half's steps
    double gap_fwd = 0.0; // NaN until that direction has a live model
    double gap_bwd = 0.0;
    double avg_kl = 0.0;  // just-trained chain vs analytic marginals; NaN if no oracle
    long long nfe = 0;    // cumulative target-construction evaluations
    double seconds = 0.0;
};

struct RunMetrics {
    std::vector<HalfEpochRecord> records;
    long long nfe_total = 0;
};

struct TrainHooks {
    std::function<void(const HalfEpochRecord&, const BridgeModel& fwd,
                       const BridgeModel& bwd)>
        after_half;
};

struct TrainResult {
    BridgeModel forward;
    BridgeModel backward;
    RunMetrics metrics;
};

// The alternating scheme: for each epoch, sample backward trajectories from
// the current backward model and train the forward net on them, then sample
// forward trajectories and train the backward net. The very first half with
// random init samples from the Brownian reference instead. Deterministic
// given the config (thread count does not change results). Throws
// NumericError on divergence after the completed halves' checkpoints and
// metrics are on disk.
TrainResult train_ipf(const TrainConfig& cfg, const Sampler& data, const Sampler& prior,
                      const GammaSchedule& sched,
                      const PretrainedSgm* init_backward = nullptr,
                      const PretrainedSgm* init_forward = nullptr,
                      const TrainHooks* hooks = nullptr);

// Network evaluations needed to construct one training target: 2 for the
// original two-evaluation objective, 1 for the reparameterized ones.
int nfe_counter(ObjectiveKind obj);

// Runs the chain to its terminus, fits Gaussian moments to the terminal
// samples and to reference draws, returns their symmetric KL. A singular
// fitted covariance is regularized by +1e-6 I and flagged.
double marginal_gap(const MeanFn& mean, Direction dir, const GammaSchedule& sched,
                    const Sampler& endpoints, const Sampler& reference, int n_paths,
                    uint64_t seed, int threads = 1, bool* regularized = nullptr);
double marginal_gap(const BridgeModel& model, const Sampler& endpoints,
                    const Sampler& reference, int n_paths, uint64_t seed,
                    int threads = 1, bool* regularized = nullptr);

// metrics.csv: a "# config_hash=..." comment line, then
// half_epoch,loss,gap_fwd,gap_bwd,avg_kl,nfe,seconds rows.
void write_metrics_csv(const std::string& path, const RunMetrics& metrics,
                       const std::string& config_hash);
RunMetrics read_metrics_csv(const std::string& path, std::string* config_hash = nullptr);

} // namespace sblab
