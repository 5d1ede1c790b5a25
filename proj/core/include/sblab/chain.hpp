#pragma once

#include "sblab/objectives.hpp"
#include "sblab/rng.hpp"
#include "sblab/schedule.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sblab {

// Abstract step-mean map (k, x) -> mean of the next state along the owning
// direction. Evaluated in batches with a per-row timestep; implementations
// must be pure and thread-safe.
struct MeanFn {
    int d = 0;
    std::function<void(const int* ks, const double* X, int n, double* out)> fn;

    void eval(const int* ks, const double* X, int n, double* out) const { fn(ks, X, n, out); }
    void eval_const(int k, const double* X, int n, double* out) const;
};

// Zero-drift map (k, x) -> x; the reference process takes Brownian
// increments of variance 2*gamma around it.
MeanFn reference_mean(const std::string& kind, int d);

// Step-noise law: Gamma uses variance 2*gamma_k; Posterior uses the exact
// bridge conditional variance (optional sampling mode).
enum class NoiseMode { Gamma, Posterior };

// A batch of chains over the same schedule. states[p] covers indices
// k = 0..N regardless of direction; the direction tag records which
// endpoint was drawn i.i.d. and which way the simulation ran.
struct TrajectoryBatch {
    int n_paths = 0;
    int n_steps = 0;
    int d = 0;
    Direction dir = Direction::Forward;
    uint64_t seed = 0;  // root of the per-path noise streams
    int dropped = 0;    // paths excluded for non-finite states
    std::vector<double> states; // n_paths x (n_steps+1) x d

    const double* state(int p, int k) const {
        return states.data() +
               (static_cast<size_t>(p) * static_cast<size_t>(n_steps + 1) + static_cast<size_t>(k)) *
                   static_cast<size_t>(d);
    }
    double* state(int p, int k) {
        return states.data() +
               (static_cast<size_t>(p) * static_cast<size_t>(n_steps + 1) + static_cast<size_t>(k)) *
                   static_cast<size_t>(d);
    }
};

// x_{k+1} = mean_fn(k, x_k) + sqrt(2 gamma_{k+1}) z, k = 0..N-1, starting
// from the given x_0 rows. Noise comes from per-path streams derived off one
// root drawn from `rng`, so results are independent of sharding. Paths that
// go non-finite are dropped and counted.
TrajectoryBatch sample_forward(const MeanFn& mean_fn, const GammaSchedule& sched,
                               const std::vector<double>& x0_batch, Rng& rng,
                               NoiseMode noise = NoiseMode::Gamma, int threads = 1);

// Mirror: x_{k-1} = mean_fn(k, x_k) + sqrt(2 gamma_k) z, k = N..1.
TrajectoryBatch sample_backward(const MeanFn& mean_fn, const GammaSchedule& sched,
                                const std::vector<double>& xN_batch, Rng& rng,
                                NoiseMode noise = NoiseMode::Gamma, int threads = 1);

// Training tuples drawn uniformly over (path, transition k). The trained
// direction is the opposite of the trajectory direction. For DsbOriginal the
// target needs the partner model, so `targets` stays empty and `other`
// carries the companion state instead.
struct TupleBatch {
    int n = 0;
    int d = 0;
    Direction train_dir = Direction::Backward;
    ObjectiveKind obj = ObjectiveKind::Ipmm;
    std::vector<int> ks;
    std::vector<double> inputs;
    std::vector<double> targets;
    std::vector<double> other;
};

TupleBatch subsample_pairs(const TrajectoryBatch& trajs, ObjectiveKind obj,
                           const GammaSchedule& sched, int count, Rng& rng);

// Original two-evaluation target, single tuple: evaluates the partner's
// step-mean map itself. Training a backward net queries the forward partner
// at k with both states; training a forward net queries the backward
// partner at k+1 with both states.
std::vector<double> dsb_original_target(Direction train_dir, int k,
                                        const std::vector<double>& x_k,
                                        const std::vector<double>& x_k1,
                                        const MeanFn& partner);

// CSV with header "path_id,k,x_0,...,x_{d-1}" plus a sidecar
// "<path>.meta.json" carrying direction, seed, schedule hash and the
// caller's config hash.
void write_trajectory_csv(const std::string& path, const TrajectoryBatch& batch,
                          uint64_t sched_hash, const std::string& config_hash);
TrajectoryBatch read_trajectory_csv(const std::string& path);

} // namespace sblab
