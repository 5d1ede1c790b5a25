#include "sblab/chain.hpp"

#include "sblab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace sblab {

void MeanFn::eval_const(int k, const double* X, int n, double* out) const {
    std::vector<int> ks(static_cast<size_t>(n), k);
    fn(ks.data(), X, n, out);
}

MeanFn reference_mean(const std::string& kind, int d) {
    if (kind != "brownian") throw InvalidArgument("reference_mean: unknown kind " + kind);
    if (d <= 0) throw InvalidArgument("reference_mean: d must be positive");
    MeanFn m;
    m.d = d;
    m.fn = [d](const int*, const double* X, int n, double* out) {
        std::memcpy(out, X, static_cast<size_t>(n) * static_cast<size_t>(d) * sizeof(double));
    };
    return m;
}

namespace {

bool row_finite(const double* x, int d) {
    for (int j = 0; j < d; ++j)
        if (!std::isfinite(x[j])) return false;
    return true;
}

TrajectoryBatch sample_impl(const MeanFn& mean_fn, const GammaSchedule& sched,
                            const std::vector<double>& ends, Rng& rng, NoiseMode noise,
                            int threads, Direction dir) {
    const int d = mean_fn.d;
    if (d <= 0) throw InvalidArgument("sample: mean_fn has no dimension");
    if (ends.empty() || ends.size() % static_cast<size_t>(d) != 0)
        throw InvalidArgument("sample: endpoint batch size not a multiple of d");
    const int n = static_cast<int>(ends.size()) / d;
    const int N = sched.n_steps();

    TrajectoryBatch out;
    out.n_paths = n;
    out.n_steps = N;
    out.d = d;
    out.dir = dir;
    out.seed = rng.next_u64();
    out.states.assign(static_cast<size_t>(n) * static_cast<size_t>(N + 1) * static_cast<size_t>(d), 0.0);

    auto run_range = [&](int p0, int p1) {
        if (p0 >= p1) return;
        const int span = p1 - p0;
        std::vector<double> cur(static_cast<size_t>(span) * d);
        std::vector<double> mean(static_cast<size_t>(span) * d);
        std::vector<Rng> streams;
        streams.reserve(static_cast<size_t>(span));
        for (int p = p0; p < p1; ++p)
            streams.emplace_back(derive_seed(out.seed, {static_cast<uint64_t>(p)}));

        const int start = (dir == Direction::Forward) ? 0 : N;
        for (int p = p0; p < p1; ++p) {
            std::memcpy(&cur[static_cast<size_t>(p - p0) * d], &ends[static_cast<size_t>(p) * d],
                        static_cast<size_t>(d) * sizeof(double));
            std::memcpy(out.state(p, start), &ends[static_cast<size_t>(p) * d],
                        static_cast<size_t>(d) * sizeof(double));
        }

        const int steps = N;
        for (int s = 0; s < steps; ++s) {
            // Forward: state k -> k+1 queried at k. Backward: state j -> j-1
            // queried at j.
            const int k_query = (dir == Direction::Forward) ? s : N - s;
            const int k_write = (dir == Direction::Forward) ? s + 1 : N - s - 1;
            double var;
            if (dir == Direction::Forward) {
                const double g = sched.gamma(s + 1);
                if (noise == NoiseMode::Gamma) {
                    var = 2.0 * g;
                } else {
                    const double rem0 = 1.0 - sched.gamma_bars[static_cast<size_t>(s)];
                    const double rem1 = 1.0 - sched.gamma_bars[static_cast<size_t>(s) + 1];
                    var = 2.0 * g * rem1 / rem0;
                }
            } else {
                const int j = N - s;
                const double g = sched.gamma(j);
                if (noise == NoiseMode::Gamma) {
                    var = 2.0 * g;
                } else {
                    const double gb1 = sched.gamma_bars[static_cast<size_t>(j)];
                    const double gb0 = sched.gamma_bars[static_cast<size_t>(j) - 1];
                    var = 2.0 * g * gb0 / gb1;
                }
            }
            const double sigma = std::sqrt(var);
            mean_fn.eval_const(k_query, cur.data(), span, mean.data());
            for (int p = 0; p < span; ++p) {
                double* row = &cur[static_cast<size_t>(p) * d];
                const double* mu = &mean[static_cast<size_t>(p) * d];
                double* dst = out.state(p0 + p, k_write);
                for (int j = 0; j < d; ++j) {
                    row[j] = mu[j] + sigma * streams[static_cast<size_t>(p)].normal();
                    dst[j] = row[j];
                }
            }
        }
    };

    int T = threads > 1 ? threads : 1;
    if (T > n) T = n;
    if (T <= 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n + T - 1) / T;
        for (int t = 0; t < T; ++t)
            pool.emplace_back(run_range, t * chunk, std::min(n, (t + 1) * chunk));
        for (auto& th : pool) th.join();
    }

    // Drop diverged paths (any non-finite state anywhere on the path).
    int w = 0;
    const size_t row_len = static_cast<size_t>(N + 1) * static_cast<size_t>(d);
    for (int p = 0; p < n; ++p) {
        bool ok = true;
        for (int k = 0; k <= N && ok; ++k) ok = row_finite(out.state(p, k), d);
        if (ok) {
            if (w != p)
                std::memmove(&out.states[static_cast<size_t>(w) * row_len],
                             &out.states[static_cast<size_t>(p) * row_len],
                             row_len * sizeof(double));
            ++w;
        }
    }
    out.dropped = n - w;
    out.n_paths = w;
    out.states.resize(static_cast<size_t>(w) * row_len);
    if (w == 0) throw NumericError("sample: every path diverged");
    return out;
}

} // namespace

TrajectoryBatch sample_forward(const MeanFn& mean_fn, const GammaSchedule& sched,
                               const std::vector<double>& x0_batch, Rng& rng,
                               NoiseMode noise, int threads) {
    return sample_impl(mean_fn, sched, x0_batch, rng, noise, threads, Direction::Forward);
}

TrajectoryBatch sample_backward(const MeanFn& mean_fn, const GammaSchedule& sched,
                                const std::vector<double>& xN_batch, Rng& rng,
                                NoiseMode noise, int threads) {
    return sample_impl(mean_fn, sched, xN_batch, rng, noise, threads, Direction::Backward);
}

TupleBatch subsample_pairs(const TrajectoryBatch& trajs, ObjectiveKind obj,
                           const GammaSchedule& sched, int count, Rng& rng) {
    if (trajs.n_paths <= 0) throw InvalidArgument("subsample_pairs: empty trajectory batch");
    if (count <= 0) throw InvalidArgument("subsample_pairs: count must be positive");
    if (trajs.n_steps != sched.n_steps())
        throw InvalidArgument("subsample_pairs: schedule does not match trajectories");
    if ((obj == ObjectiveKind::Iptm || obj == ObjectiveKind::Ipfm) && !sched.normalized())
        throw InvalidArgument("subsample_pairs: objective requires a normalized schedule");

    const int d = trajs.d;
    const int N = trajs.n_steps;
    TupleBatch out;
    out.n = count;
    out.d = d;
    out.obj = obj;
    out.train_dir = (trajs.dir == Direction::Forward) ? Direction::Backward : Direction::Forward;
    out.ks.resize(static_cast<size_t>(count));
    out.inputs.resize(static_cast<size_t>(count) * d);
    const bool dsb = (obj == ObjectiveKind::DsbOriginal);
    if (dsb)
        out.other.resize(static_cast<size_t>(count) * d);
    else
        out.targets.resize(static_cast<size_t>(count) * d);

    for (int i = 0; i < count; ++i) {
        const int p = static_cast<int>(rng.below(static_cast<uint64_t>(trajs.n_paths)));
        const int k = static_cast<int>(rng.below(static_cast<uint64_t>(N)));
        out.ks[static_cast<size_t>(i)] = k;
        const double* xk = trajs.state(p, k);
        const double* xk1 = trajs.state(p, k + 1);
        const double* x0 = trajs.state(p, 0);
        const double* xN = trajs.state(p, N);
        double* in = &out.inputs[static_cast<size_t>(i) * d];
        if (out.train_dir == Direction::Backward) {
            std::memcpy(in, xk1, static_cast<size_t>(d) * sizeof(double));
            switch (obj) {
                case ObjectiveKind::DsbOriginal:
                    std::memcpy(&out.other[static_cast<size_t>(i) * d], xk,
                                static_cast<size_t>(d) * sizeof(double));
                    break;
                case ObjectiveKind::Ipmm:
                    std::memcpy(&out.targets[static_cast<size_t>(i) * d], xk,
                                static_cast<size_t>(d) * sizeof(double));
                    break;
                case ObjectiveKind::Iptm:
                    std::memcpy(&out.targets[static_cast<size_t>(i) * d], x0,
                                static_cast<size_t>(d) * sizeof(double));
                    break;
                case ObjectiveKind::Ipfm: {
                    const double gb1 = sched.gamma_bars[static_cast<size_t>(k) + 1];
                    double* t = &out.targets[static_cast<size_t>(i) * d];
                    for (int j = 0; j < d; ++j) t[j] = (x0[j] - xk1[j]) / gb1;
                    break;
                }
            }
        } else {
            std::memcpy(in, xk, static_cast<size_t>(d) * sizeof(double));
            switch (obj) {
                case ObjectiveKind::DsbOriginal:
                    std::memcpy(&out.other[static_cast<size_t>(i) * d], xk1,
                                static_cast<size_t>(d) * sizeof(double));
                    break;
                case ObjectiveKind::Ipmm:
                    std::memcpy(&out.targets[static_cast<size_t>(i) * d], xk1,
                                static_cast<size_t>(d) * sizeof(double));
                    break;
                case ObjectiveKind::Iptm:
                    std::memcpy(&out.targets[static_cast<size_t>(i) * d], xN,
                                static_cast<size_t>(d) * sizeof(double));
                    break;
                case ObjectiveKind::Ipfm: {
                    const double rem = 1.0 - sched.gamma_bars[static_cast<size_t>(k)];
                    double* t = &out.targets[static_cast<size_t>(i) * d];
                    for (int j = 0; j < d; ++j) t[j] = (xN[j] - xk[j]) / rem;
                    break;
                }
            }
        }
    }
    return out;
}

std::vector<double> dsb_original_target(Direction train_dir, int k,
                                        const std::vector<double>& x_k,
                                        const std::vector<double>& x_k1,
                                        const MeanFn& partner) {
    if (x_k.size() != x_k1.size() || x_k.size() != static_cast<size_t>(partner.d))
        throw InvalidArgument("dsb_original_target: state dimensions disagree");
    const int d = partner.d;
    const int q = (train_dir == Direction::Backward) ? k : k + 1;
    std::vector<double> at_xk(static_cast<size_t>(d)), at_xk1(static_cast<size_t>(d));
    partner.eval_const(q, x_k.data(), 1, at_xk.data());
    partner.eval_const(q, x_k1.data(), 1, at_xk1.data());
    return dsb_original_target(train_dir, x_k, x_k1, at_xk, at_xk1);
}

void write_trajectory_csv(const std::string& path, const TrajectoryBatch& batch,
                          uint64_t sched_hash, const std::string& config_hash) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("write_trajectory_csv: cannot open " + path);
    std::fputs("path_id,k", f);
    for (int j = 0; j < batch.d; ++j) std::fprintf(f, ",x_%d", j);
    std::fputc('\n', f);
    for (int p = 0; p < batch.n_paths; ++p) {
        for (int k = 0; k <= batch.n_steps; ++k) {
            std::fprintf(f, "%d,%d", p, k);
            const double* row = batch.state(p, k);
            for (int j = 0; j < batch.d; ++j) std::fprintf(f, ",%.17g", row[j]);
            std::fputc('\n', f);
        }
    }
    if (std::fclose(f) != 0) throw IoError("write_trajectory_csv: close failed for " + path);

    nlohmann::json meta;
    meta["direction"] = direction_name(batch.dir);
    meta["seed"] = batch.seed;
    meta["schedule_hash"] = sched_hash;
    meta["n_paths"] = batch.n_paths;
    meta["n_steps"] = batch.n_steps;
    meta["d"] = batch.d;
    meta["dropped"] = batch.dropped;
    if (!config_hash.empty()) meta["config_hash"] = config_hash;
    std::ofstream m(path + ".meta.json");
    if (!m) throw IoError("write_trajectory_csv: cannot open sidecar for " + path);
    m << meta.dump(2) << "\n";
}

TrajectoryBatch read_trajectory_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("read_trajectory_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError("read_trajectory_csv: empty file " + path);
    // header: path_id,k,x_0,...
    int d = 0;
    {
        std::stringstream ss(line);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() < 3 || cols[0] != "path_id" || cols[1] != "k")
            throw IoError("read_trajectory_csv: malformed header in " + path);
        d = static_cast<int>(cols.size()) - 2;
    }
    struct Row { int p, k; std::vector<double> x; };
    std::vector<Row> rows;
    int max_p = -1, max_k = 0;
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Row r;
        try {
            if (!std::getline(ss, cell, ',')) throw std::invalid_argument("p");
            r.p = std::stoi(cell);
            if (!std::getline(ss, cell, ',')) throw std::invalid_argument("k");
            r.k = std::stoi(cell);
            for (int j = 0; j < d; ++j) {
                if (!std::getline(ss, cell, ',')) throw std::invalid_argument("x");
                r.x.push_back(std::stod(cell));
            }
        } catch (const std::exception&) {
            throw IoError("read_trajectory_csv: malformed row " + std::to_string(lineno) +
                          " in " + path);
        }
        max_p = std::max(max_p, r.p);
        max_k = std::max(max_k, r.k);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) {
        TrajectoryBatch empty;
        empty.d = d;
        return empty;
    }

    TrajectoryBatch out;
    out.n_paths = max_p + 1;
    out.n_steps = max_k;
    out.d = d;
    out.states.assign(static_cast<size_t>(out.n_paths) * static_cast<size_t>(max_k + 1) *
                          static_cast<size_t>(d),
                      0.0);
    for (const auto& r : rows) {
        if (r.p < 0 || r.k < 0) throw IoError("read_trajectory_csv: negative index in " + path);
        double* dst = out.state(r.p, r.k);
        for (int j = 0; j < d; ++j) dst[j] = r.x[static_cast<size_t>(j)];
    }

    std::ifstream m(path + ".meta.json");
    if (m) {
        try {
            nlohmann::json meta = nlohmann::json::parse(m);
            if (meta.contains("direction") && meta["direction"] == "backward")
                out.dir = Direction::Backward;
            if (meta.contains("seed")) out.seed = meta["seed"].get<uint64_t>();
            if (meta.contains("dropped")) out.dropped = meta["dropped"].get<int>();
        } catch (const nlohmann::json::exception&) {
            throw IoError("read_trajectory_csv: malformed sidecar for " + path);
        }
    }
    return out;
}

} // namespace sblab
