#include "sblab/oracle.hpp"

#include "sblab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace sblab {

namespace {

// In-place lower Cholesky of a d x d row-major SPD matrix. Returns false
// when a pivot is not strictly positive (beyond tol).
bool cholesky(std::vector<double>& A, int d, double tol = 0.0) {
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = A[static_cast<size_t>(i) * d + j];
            for (int t = 0; t < j; ++t)
                s -= A[static_cast<size_t>(i) * d + t] * A[static_cast<size_t>(j) * d + t];
            if (i == j) {
                if (!(s > tol)) return false;
                A[static_cast<size_t>(i) * d + j] = std::sqrt(s);
            } else {
                A[static_cast<size_t>(i) * d + j] = s / A[static_cast<size_t>(j) * d + j];
            }
        }
        for (int j = i + 1; j < d; ++j) A[static_cast<size_t>(i) * d + j] = 0.0;
    }
    return true;
}

// Solve L L^T x = b.
void chol_solve(const std::vector<double>& L, int d, const double* b, double* x) {
    std::vector<double> y(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
        double s = b[i];
        for (int j = 0; j < i; ++j) s -= L[static_cast<size_t>(i) * d + j] * y[static_cast<size_t>(j)];
        y[static_cast<size_t>(i)] = s / L[static_cast<size_t>(i) * d + i];
    }
    for (int i = d - 1; i >= 0; --i) {
        double s = y[static_cast<size_t>(i)];
        for (int j = i + 1; j < d; ++j) s -= L[static_cast<size_t>(j) * d + i] * x[j];
        x[i] = s / L[static_cast<size_t>(i) * d + i];
    }
}

double chol_logdet(const std::vector<double>& L, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += std::log(L[static_cast<size_t>(i) * d + i]);
    return 2.0 * s;
}

} // namespace

GaussianMoments isotropic_moments(std::vector<double> mean, double variance) {
    GaussianMoments g;
    g.d = static_cast<int>(mean.size());
    g.mean = std::move(mean);
    g.cov.assign(static_cast<size_t>(g.d) * g.d, 0.0);
    for (int i = 0; i < g.d; ++i) g.cov[static_cast<size_t>(i) * g.d + i] = variance;
    return g;
}

double gaussian_kl(const GaussianMoments& p, const GaussianMoments& q) {
    const int d = p.d;
    if (q.d != d) throw InvalidArgument("gaussian_kl: dimensions differ");
    std::vector<double> Lq = q.cov;
    if (!cholesky(Lq, d)) throw NumericError("gaussian_kl: singular covariance in q");
    std::vector<double> Lp = p.cov;
    if (!cholesky(Lp, d)) throw NumericError("gaussian_kl: singular covariance in p");

    // tr(Sq^-1 Sp): solve per column of Sp.
    double trace = 0.0;
    std::vector<double> col(static_cast<size_t>(d)), sol(static_cast<size_t>(d));
    for (int c = 0; c < d; ++c) {
        for (int r = 0; r < d; ++r) col[static_cast<size_t>(r)] = p.cov[static_cast<size_t>(r) * d + c];
        chol_solve(Lq, d, col.data(), sol.data());
        trace += sol[static_cast<size_t>(c)];
    }
    std::vector<double> dm(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) dm[static_cast<size_t>(i)] = q.mean[static_cast<size_t>(i)] - p.mean[static_cast<size_t>(i)];
    chol_solve(Lq, d, dm.data(), sol.data());
    double maha = 0.0;
    for (int i = 0; i < d; ++i) maha += dm[static_cast<size_t>(i)] * sol[static_cast<size_t>(i)];

    return 0.5 * (trace + maha - d + chol_logdet(Lq, d) - chol_logdet(Lp, d));
}

double symmetric_gaussian_kl(const GaussianMoments& p, const GaussianMoments& q) {
    return 0.5 * (gaussian_kl(p, q) + gaussian_kl(q, p));
}

double entropic_cross_covariance(double eps_total) {
    if (!(eps_total > 0.0)) throw InvalidArgument("entropic_cross_covariance: eps must be > 0");
    return std::sqrt(1.0 + eps_total * eps_total / 4.0) - eps_total / 2.0;
}

GaussianMoments analytic_sb_marginal(const std::vector<double>& a, double t,
                                     double eps_total) {
    if (t < 0.0 || t > 1.0) throw InvalidArgument("analytic_sb_marginal: t outside [0, 1]");
    if (!(eps_total > 0.0)) throw InvalidArgument("analytic_sb_marginal: eps must be > 0");
    const double c = entropic_cross_covariance(eps_total);
    const double s = 1.0 - t;
    const double var = s * s + t * t + 2.0 * t * s * c + eps_total * t * s;
    std::vector<double> mean(a.size());
    for (size_t j = 0; j < a.size(); ++j) mean[j] = (1.0 - 2.0 * t) * a[j];
    return isotropic_moments(std::move(mean), var);
}

GaussianMoments fit_gaussian(const double* samples, int n, int d) {
    if (n <= d) throw InvalidArgument("fit_gaussian: need more samples than dimensions");
    GaussianMoments g;
    g.d = d;
    g.mean.assign(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) g.mean[static_cast<size_t>(j)] += samples[static_cast<size_t>(i) * d + j];
    for (int j = 0; j < d; ++j) g.mean[static_cast<size_t>(j)] /= double(n);

    g.cov.assign(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = samples + static_cast<size_t>(i) * d;
        for (int r = 0; r < d; ++r) {
            const double dr = row[r] - g.mean[static_cast<size_t>(r)];
            for (int c = r; c < d; ++c)
                g.cov[static_cast<size_t>(r) * d + c] += dr * (row[c] - g.mean[static_cast<size_t>(c)]);
        }
    }
    for (int r = 0; r < d; ++r)
        for (int c = r; c < d; ++c) {
            g.cov[static_cast<size_t>(r) * d + c] /= double(n - 1);
            g.cov[static_cast<size_t>(c) * d + r] = g.cov[static_cast<size_t>(r) * d + c];
        }
    return g;
}

GaussianMoments fit_gaussian(const std::vector<double>& samples, int d) {
    if (d <= 0 || samples.size() % static_cast<size_t>(d) != 0)
        throw InvalidArgument("fit_gaussian: bad sample buffer");
    return fit_gaussian(samples.data(), static_cast<int>(samples.size()) / d, d);
}

bool nearly_singular(const GaussianMoments& g, double tol) {
    std::vector<double> L = g.cov;
    return !cholesky(L, g.d, tol);
}

namespace {

double logsumexp(const double* v, size_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
    if (!std::isfinite(mx)) return mx; // all -inf
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
    return mx + std::log(s);
}

} // namespace

DiscreteCoupling sinkhorn_coupling(const std::vector<double>& hist_p,
                                   const std::vector<double>& hist_q,
                                   const std::vector<double>& cost, int nx, int ny,
                                   double eps, int max_iters, double tol) {
    if (nx <= 0 || ny <= 0) throw InvalidArgument("sinkhorn_coupling: empty grids");
    if (hist_p.size() != static_cast<size_t>(nx) || hist_q.size() != static_cast<size_t>(ny))
        throw InvalidArgument("sinkhorn_coupling: histogram sizes do not match grids");
    if (cost.size() != static_cast<size_t>(nx) * static_cast<size_t>(ny))
        throw InvalidArgument("sinkhorn_coupling: cost matrix size mismatch");
    if (!(eps > 0.0)) throw InvalidArgument("sinkhorn_coupling: eps must be > 0");
    double sp = 0.0, sq = 0.0;
    for (double v : hist_p) sp += v;
    for (double v : hist_q) sq += v;
    if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
        throw InvalidArgument("sinkhorn_coupling: histograms must sum to 1");

    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> logp(static_cast<size_t>(nx)), logq(static_cast<size_t>(ny));
    for (int i = 0; i < nx; ++i)
        logp[static_cast<size_t>(i)] = hist_p[static_cast<size_t>(i)] > 0.0 ? std::log(hist_p[static_cast<size_t>(i)]) : neg_inf;
    for (int j = 0; j < ny; ++j)
        logq[static_cast<size_t>(j)] = hist_q[static_cast<size_t>(j)] > 0.0 ? std::log(hist_q[static_cast<size_t>(j)]) : neg_inf;

    std::vector<double> f(static_cast<size_t>(nx), 0.0), g(static_cast<size_t>(ny), 0.0);
    std::vector<double> buf(static_cast<size_t>(std::max(nx, ny)));

    DiscreteCoupling out;
    out.nx = nx;
    out.ny = ny;
    out.eps = eps;
    out.joint.assign(static_cast<size_t>(nx) * static_cast<size_t>(ny), 0.0);

    auto fill_joint_and_err = [&]() {
        double err = 0.0;
        std::vector<double> colsum(static_cast<size_t>(ny), 0.0);
        for (int i = 0; i < nx; ++i) {
            double rowsum = 0.0;
            for (int j = 0; j < ny; ++j) {
                double lv = (f[static_cast<size_t>(i)] + g[static_cast<size_t>(j)] -
                             cost[static_cast<size_t>(i) * ny + j]) / eps;
                double v = std::exp(lv);
                out.joint[static_cast<size_t>(i) * ny + j] = v;
                rowsum += v;
                colsum[static_cast<size_t>(j)] += v;
            }
            err += std::abs(rowsum - hist_p[static_cast<size_t>(i)]);
        }
        for (int j = 0; j < ny; ++j) err += std::abs(colsum[static_cast<size_t>(j)] - hist_q[static_cast<size_t>(j)]);
        return err;
    };

    for (int it = 0; it < max_iters; ++it) {
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j)
                buf[static_cast<size_t>(j)] = (g[static_cast<size_t>(j)] -
                                               cost[static_cast<size_t>(i) * ny + j]) / eps;
            double lse = logsumexp(buf.data(), static_cast<size_t>(ny));
            f[static_cast<size_t>(i)] = (logp[static_cast<size_t>(i)] == neg_inf)
                                            ? neg_inf
                                            : eps * (logp[static_cast<size_t>(i)] - lse);
        }
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i)
                buf[static_cast<size_t>(i)] = (f[static_cast<size_t>(i)] -
                                               cost[static_cast<size_t>(i) * ny + j]) / eps;
            double lse = logsumexp(buf.data(), static_cast<size_t>(nx));
            g[static_cast<size_t>(j)] = (logq[static_cast<size_t>(j)] == neg_inf)
                                            ? neg_inf
                                            : eps * (logq[static_cast<size_t>(j)] - lse);
        }
        out.iters = it + 1;
        double err = fill_joint_and_err();
        out.err_history.push_back(err);
        out.marginal_err = err;
        if (err < tol) break;
    }
    return out;
}

double coupling_cross_covariance(const DiscreteCoupling& c) {
    if (c.grid_x.size() != static_cast<size_t>(c.nx) ||
        c.grid_y.size() != static_cast<size_t>(c.ny))
        throw InvalidArgument("coupling_cross_covariance: grids not set");
    double mass = 0.0, mx = 0.0, my = 0.0, mxy = 0.0;
    for (int i = 0; i < c.nx; ++i)
        for (int j = 0; j < c.ny; ++j) {
            const double w = c.joint[static_cast<size_t>(i) * c.ny + j];
            mass += w;
            mx += w * c.grid_x[static_cast<size_t>(i)];
            my += w * c.grid_y[static_cast<size_t>(j)];
            mxy += w * c.grid_x[static_cast<size_t>(i)] * c.grid_y[static_cast<size_t>(j)];
        }
    if (!(mass > 0.0)) throw NumericError("coupling_cross_covariance: empty coupling");
    mx /= mass;
    my /= mass;
    return mxy / mass - mx * my;
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 2) throw InvalidArgument("linspace: need n >= 2");
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = lo + (hi - lo) * double(i) / double(n - 1);
    return v;
}

std::vector<double> discretize_gaussian(double mean, double sigma,
                                        const std::vector<double>& grid) {
    std::vector<double> w(grid.size());
    double total = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
        double z = (grid[i] - mean) / sigma;
        w[i] = std::exp(-0.5 * z * z);
        total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
}

std::vector<double> quadratic_cost(const std::vector<double>& gx,
                                   const std::vector<double>& gy) {
    std::vector<double> c(gx.size() * gy.size());
    for (size_t i = 0; i < gx.size(); ++i)
        for (size_t j = 0; j < gy.size(); ++j) {
            double dxy = gx[i] - gy[j];
            c[i * gy.size() + j] = 0.5 * dxy * dxy;
        }
    return c;
}

PosteriorParams chain_conditioning_bruteforce(
    const GammaSchedule& sched, int k,
    const std::vector<std::pair<int, std::vector<double>>>& pins) {
    const int N = sched.n_steps();
    if (k < 0 || k > N) throw InvalidArgument("chain_conditioning_bruteforce: k out of range");
    if (pins.empty()) throw InvalidArgument("chain_conditioning_bruteforce: no pins");
    const size_t d = pins.front().second.size();
    if (d == 0) throw InvalidArgument("chain_conditioning_bruteforce: empty pin value");
    for (const auto& [idx, v] : pins) {
        if (idx < 0 || idx > N) throw InvalidArgument("chain_conditioning_bruteforce: pin index out of range");
        if (v.size() != d) throw InvalidArgument("chain_conditioning_bruteforce: pin dims differ");
    }

    // Chain start: a pin at index 0 if present (the chain is a point mass
    // there), else irrelevant by the Markov property as long as some pin
    // lies at or below the query.
    std::vector<double> start(d, 0.0);
    bool have_start = false;
    std::vector<std::pair<int, std::vector<double>>> cset;
    for (const auto& pr : pins) {
        if (pr.first == 0) {
            start = pr.second;
            have_start = true;
        } else {
            cset.push_back(pr);
        }
    }

    // Self-conditioning: the queried state is pinned.
    if (k == 0 && have_start) {
        PosteriorParams p;
        p.mean = start;
        p.variance = 0.0;
        return p;
    }
    for (const auto& pr : cset)
        if (pr.first == k) {
            PosteriorParams p;
            p.mean = pr.second;
            p.variance = 0.0;
            return p;
        }
    if (k == 0)
        throw InvalidArgument("chain_conditioning_bruteforce: conditioning x_0 requires a start pin");
    if (!have_start) {
        int lowest = N + 1;
        for (const auto& pr : cset) lowest = std::min(lowest, pr.first);
        if (lowest > k)
            throw InvalidArgument(
                "chain_conditioning_bruteforce: query below all pins needs a chain-start pin");
    }

    // Joint covariance of (x_i)_{i>=1} under the chain from `start`:
    // Cov(x_i, x_j) = 2 gammabar_min(i,j); mean_i = start.
    const int m = static_cast<int>(cset.size());
    PosteriorParams p;
    p.mean.assign(d, 0.0);
    if (m == 0) {
        // Only the start pin: the prior marginal of x_k.
        p.mean = start;
        p.variance = 2.0 * sched.gamma_bars[static_cast<size_t>(k)];
        return p;
    }

    std::vector<double> S(static_cast<size_t>(m) * m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
            S[static_cast<size_t>(r) * m + c] =
                2.0 * sched.gamma_bars[static_cast<size_t>(std::min(cset[static_cast<size_t>(r)].first,
                                                                    cset[static_cast<size_t>(c)].first))];
    std::vector<double> L = S;
    if (!cholesky(L, m)) throw NumericError("chain_conditioning_bruteforce: singular conditioning block");

    std::vector<double> cross(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r)
        cross[static_cast<size_t>(r)] =
            2.0 * sched.gamma_bars[static_cast<size_t>(std::min(k, cset[static_cast<size_t>(r)].first))];

    // Variance: Sigma_qq - cross^T S^-1 cross (same in every dimension).
    std::vector<double> sol(static_cast<size_t>(m));
    chol_solve(L, m, cross.data(), sol.data());
    double reduction = 0.0;
    for (int r = 0; r < m; ++r) reduction += cross[static_cast<size_t>(r)] * sol[static_cast<size_t>(r)];
    p.variance = 2.0 * sched.gamma_bars[static_cast<size_t>(k)] - reduction;
    if (p.variance < 0.0 && p.variance > -1e-12) p.variance = 0.0;

    // Mean per dimension: start + cross^T S^-1 (v - start).
    std::vector<double> dev(static_cast<size_t>(m));
    for (size_t j = 0; j < d; ++j) {
        for (int r = 0; r < m; ++r)
            dev[static_cast<size_t>(r)] = cset[static_cast<size_t>(r)].second[j] - start[j];
        chol_solve(L, m, dev.data(), sol.data());
        double acc = start[j];
        for (int r = 0; r < m; ++r) acc += cross[static_cast<size_t>(r)] * sol[static_cast<size_t>(r)];
        p.mean[j] = acc;
    }
    return p;
}

std::vector<int> kl_eval_indices(const GammaSchedule& sched, int n_eval_times) {
    if (n_eval_times < 2) throw InvalidArgument("kl_eval_indices: need at least 2 eval times");
    const int N = sched.n_steps();
    std::vector<int> idx(static_cast<size_t>(n_eval_times));
    for (int j = 1; j <= n_eval_times; ++j) {
        const double tau = double(j) / double(n_eval_times + 1);
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int kk = 0; kk <= N; ++kk) {
            double dist = std::abs((1.0 - sched.gamma_bars[static_cast<size_t>(kk)]) - tau);
            if (dist < best_d) {
                best_d = dist;
                best = kk;
            }
        }
        idx[static_cast<size_t>(j) - 1] = best;
    }
    return idx;
}

double averaged_kl_of_states(const std::vector<std::vector<double>>& per_index_samples,
                             const std::vector<int>& indices, const GammaSchedule& sched,
                             const std::vector<double>& a, double eps_total, int d) {
    if (per_index_samples.size() != indices.size())
        throw InvalidArgument("averaged_kl_of_states: sample/index count mismatch");
    double acc = 0.0;
    for (size_t j = 0; j < indices.size(); ++j) {
        const double t = sched.gamma_bars[static_cast<size_t>(indices[j])];
        GaussianMoments fitted = fit_gaussian(per_index_samples[j], d);
        GaussianMoments truth = analytic_sb_marginal(a, t, eps_total);
        acc += gaussian_kl(fitted, truth);
    }
    return acc / double(indices.size());
}

double averaged_kl_chain(const MeanFn& mean, Direction dir, const GammaSchedule& sched,
                         const Sampler& endpoints, const std::vector<double>& a,
                         double eps_total, int n_eval_times, int n_paths,
                         uint64_t eval_seed, int threads) {
    if (n_paths < 1000) throw InvalidArgument("averaged_kl_chain: need >= 1000 paths");
    const int d = mean.d;
    Rng end_rng(derive_seed(eval_seed, {0xEEDul}));
    std::vector<double> ends = draw(endpoints, n_paths, end_rng);
    Rng chain_rng(derive_seed(eval_seed, {0xCAFEul}));
    TrajectoryBatch traj = (dir == Direction::Backward)
                               ? sample_backward(mean, sched, ends, chain_rng,
                                                 NoiseMode::Gamma, threads)
                               : sample_forward(mean, sched, ends, chain_rng,
                                                NoiseMode::Gamma, threads);

    std::vector<int> indices = kl_eval_indices(sched, n_eval_times);
    std::vector<std::vector<double>> slices(indices.size());
    for (size_t j = 0; j < indices.size(); ++j) {
        slices[j].resize(static_cast<size_t>(traj.n_paths) * static_cast<size_t>(d));
        for (int p = 0; p < traj.n_paths; ++p)
            std::memcpy(&slices[j][static_cast<size_t>(p) * d], traj.state(p, indices[j]),
                        static_cast<size_t>(d) * sizeof(double));
    }
    return averaged_kl_of_states(slices, indices, sched, a, eps_total, d);
}

double averaged_kl_metric(const MeanFn& backward_mean, const GammaSchedule& sched,
                          const Sampler& prior, const std::vector<double>& a,
                          double eps_total, int n_eval_times, int n_paths,
                          uint64_t eval_seed, int threads) {
    return averaged_kl_chain(backward_mean, Direction::Backward, sched, prior, a, eps_total,
                             n_eval_times, n_paths, eval_seed, threads);
}

} // namespace sblab
