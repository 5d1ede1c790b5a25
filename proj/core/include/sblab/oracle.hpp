#pragma once

#include "sblab/chain.hpp"
#include "sblab/datasets.hpp"
#include "sblab/objectives.hpp"
#include "sblab/schedule.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace sblab {

struct GaussianMoments {
    std::vector<double> mean;     // d
    std::vector<double> cov;      // d x d row-major, symmetric PSD
    int d = 0;
};

GaussianMoments isotropic_moments(std::vector<double> mean, double variance);

// 0.5 [ tr(Sq^-1 Sp) + (mq-mp)^T Sq^-1 (mq-mp) - d + ln(det Sq / det Sp) ].
// Throws NumericError when either covariance is not SPD.
double gaussian_kl(const GaussianMoments& p, const GaussianMoments& q);

// 0.5 [ KL(p||q) + KL(q||p) ].
double symmetric_gaussian_kl(const GaussianMoments& p, const GaussianMoments& q);

// Per-dimension cross-covariance of the static entropic coupling between
// N(a, I) and N(-a, I) at regularization eps: sqrt(1 + eps^2/4) - eps/2.
// Validated numerically against sinkhorn_coupling (see tests).
double entropic_cross_covariance(double eps_total);

// Bridge marginal of the analytic solution between N(a, I) and N(-a, I)
// under a Brownian reference of total variance eps_total:
// mean (1-2t) a, cov [(1-t)^2 + t^2 + 2t(1-t)c + eps_total t(1-t)] I.
GaussianMoments analytic_sb_marginal(const std::vector<double>& a, double t,
                                     double eps_total);

// Sample mean and unbiased sample covariance. Requires n > d.
GaussianMoments fit_gaussian(const double* samples, int n, int d);
GaussianMoments fit_gaussian(const std::vector<double>& samples, int d);

// True iff the covariance has no Cholesky factorization (up to tol on the
// diagonal pivots).
bool nearly_singular(const GaussianMoments& g, double tol = 0.0);

// Discrete entropic coupling computed by log-domain Sinkhorn iterations.
struct DiscreteCoupling {
    std::vector<double> grid_x, grid_y; // optional support bookkeeping
    std::vector<double> joint;          // nx x ny row-major
    int nx = 0, ny = 0;
    double eps = 0.0;
    double marginal_err = 0.0;          // L1 error at the final iterate
    int iters = 0;
    std::vector<double> err_history;    // per-iteration marginal L1 error
};

// hist_p/hist_q sum to 1; cost is nx x ny row-major. Stops when the L1
// marginal error drops below tol or after max_iters.
DiscreteCoupling sinkhorn_coupling(const std::vector<double>& hist_p,
                                   const std::vector<double>& hist_q,
                                   const std::vector<double>& cost, int nx, int ny,
                                   double eps, int max_iters, double tol);

// Cov(x, y) under the coupling (requires grid_x/grid_y to be set).
double coupling_cross_covariance(const DiscreteCoupling& c);

// Helpers for the 1-D validation problem.
std::vector<double> linspace(double lo, double hi, int n);
std::vector<double> discretize_gaussian(double mean, double sigma,
                                        const std::vector<double>& grid);
// cost(x, y) = (x - y)^2 / 2, matching the Brownian transition kernel when
// eps equals the reference process's total variance.
std::vector<double> quadratic_cost(const std::vector<double>& grid_x,
                                   const std::vector<double>& grid_y);

// Exact conditional of state k of the zero-drift Brownian chain given the
// pinned states, via full joint Gaussian conditioning (no reuse of the
// closed-form step formulas). A pin at index 0 sets the chain start.
PosteriorParams chain_conditioning_bruteforce(
    const GammaSchedule& sched, int k,
    const std::vector<std::pair<int, std::vector<double>>>& pins);

// Indices used by the averaged-KL metric: for each target
// tau_j = j/(n_eval+1) on the backward time axis tau_k = 1 - gammabar_k,
// the nearest state index.
std::vector<int> kl_eval_indices(const GammaSchedule& sched, int n_eval_times);

// Mean over eval indices of KL(fitted state-marginal || analytic marginal
// at t = gammabar_k). per_index_samples[j] holds n x d samples of state
// indices[j].
double averaged_kl_of_states(const std::vector<std::vector<double>>& per_index_samples,
                             const std::vector<int>& indices, const GammaSchedule& sched,
                             const std::vector<double>& a, double eps_total, int d);

// Simulates backward trajectories from the prior sampler with the given
// step-mean map and evaluates the averaged KL against the analytic bridge.
double averaged_kl_metric(const MeanFn& backward_mean, const GammaSchedule& sched,
                          const Sampler& prior, const std::vector<double>& a,
                          double eps_total, int n_eval_times, int n_paths,
                          uint64_t eval_seed, int threads = 1);

// Direction-general form of the same metric: simulates the chain from
// `endpoints` (data for forward, prior for backward) and compares each
// selected state k against the analytic marginal at t = gammabar_k.
double averaged_kl_chain(const MeanFn& mean, Direction dir, const GammaSchedule& sched,
                         const Sampler& endpoints, const std::vector<double>& a,
                         double eps_total, int n_eval_times, int n_paths,
                         uint64_t eval_seed, int threads = 1);

} // namespace sblab
