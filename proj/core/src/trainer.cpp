#include "sblab/trainer.hpp"

#include "sblab/checkpoint.hpp"
#include "sblab/errors.hpp"
#include "sblab/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace sblab {

const char* init_mode_name(InitMode m) {
    switch (m) {
        case InitMode::Random: return "random";
        case InitMode::BackwardOnly: return "backward";
        case InitMode::Dual: return "dual";
    }
    return "random";
}

InitMode init_mode_from_name(const std::string& name) {
    if (name == "random") return InitMode::Random;
    if (name == "backward" || name == "backward-only") return InitMode::BackwardOnly;
    if (name == "dual") return InitMode::Dual;
    throw InvalidArgument("unknown init mode: " + name);
}

namespace {

void check_query(const BridgeModel& m, int q) {
    const int N = m.sched.n_steps();
    if (m.dir == Direction::Backward) {
        if (q < 1 || q > N) throw InvalidArgument("bridge model: backward query out of [1, N]");
    } else {
        if (q < 0 || q >= N) throw InvalidArgument("bridge model: forward query out of [0, N-1]");
    }
}

} // namespace

double BridgeModel::head_skip(int q) const {
    check_query(*this, q);
    switch (obj) {
        case ObjectiveKind::DsbOriginal:
        case ObjectiveKind::Ipmm: return 1.0;
        case ObjectiveKind::Iptm: return sgm_wrapped ? 1.0 : 0.0;
        case ObjectiveKind::Ipfm: return 0.0;
    }
    return 0.0;
}

double BridgeModel::head_coeff(int q) const {
    check_query(*this, q);
    switch (obj) {
        case ObjectiveKind::DsbOriginal:
        case ObjectiveKind::Ipmm:
            return (dir == Direction::Backward) ? sched.gamma(q) : sched.gamma(q + 1);
        case ObjectiveKind::Iptm:
            if (!sgm_wrapped) return 1.0;
            return (dir == Direction::Backward)
                       ? sched.gamma_bars[static_cast<size_t>(q)]
                       : 1.0 - sched.gamma_bars[static_cast<size_t>(q)];
        case ObjectiveKind::Ipfm: return 1.0;
    }
    return 1.0;
}

int BridgeModel::net_tstep(int q) const {
    check_query(*this, q);
    return (dir == Direction::Forward && sgm_wrapped) ? sched.n_steps() - q : q;
}

MeanFn BridgeModel::mean_fn() const {
    const int N = sched.n_steps();
    const int d = net.d_in();
    // Per-query tables: prediction = skip*x + coeff*net(tstep, x), then
    // mean = mix_x*x + mix_p*prediction.
    const int q_lo = (dir == Direction::Backward) ? 1 : 0;
    const int q_hi = (dir == Direction::Backward) ? N : N - 1;
    std::vector<double> skip(static_cast<size_t>(N) + 1, 0.0), coeff(static_cast<size_t>(N) + 1, 0.0);
    std::vector<double> mix_x(static_cast<size_t>(N) + 1, 0.0), mix_p(static_cast<size_t>(N) + 1, 0.0);
    std::vector<int> tstep(static_cast<size_t>(N) + 1, 0);
    for (int q = q_lo; q <= q_hi; ++q) {
        skip[static_cast<size_t>(q)] = head_skip(q);
        coeff[static_cast<size_t>(q)] = head_coeff(q);
        tstep[static_cast<size_t>(q)] = net_tstep(q);
        const int k = (dir == Direction::Backward) ? q - 1 : q; // transition index
        switch (obj) {
            case ObjectiveKind::DsbOriginal:
            case ObjectiveKind::Ipmm:
                mix_x[static_cast<size_t>(q)] = 0.0;
                mix_p[static_cast<size_t>(q)] = 1.0;
                break;
            case ObjectiveKind::Iptm: {
                const double c = terminus_mean_coeff(dir, k, sched);
                mix_x[static_cast<size_t>(q)] = 1.0 - c;
                mix_p[static_cast<size_t>(q)] = c;
                break;
            }
            case ObjectiveKind::Ipfm:
                mix_x[static_cast<size_t>(q)] = 1.0;
                mix_p[static_cast<size_t>(q)] = flow_mean_coeff(dir, k, sched);
                break;
        }
    }

    auto snapshot = std::make_shared<const Mlp>(net);
    MeanFn m;
    m.d = d;
    m.fn = [snapshot, skip, coeff, mix_x, mix_p, tstep, q_lo, q_hi,
            d](const int* ks, const double* X, int n, double* out) {
        std::vector<int> ts(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int q = ks[i];
            if (q < q_lo || q > q_hi)
                throw InvalidArgument("bridge mean: query index out of range");
            ts[static_cast<size_t>(i)] = tstep[static_cast<size_t>(q)];
        }
        std::vector<double> Y(static_cast<size_t>(n) * d);
        mlp_forward(*snapshot, ts.data(), X, n, Y.data());
        for (int i = 0; i < n; ++i) {
            const size_t q = static_cast<size_t>(ks[i]);
            const double s = skip[q], c = coeff[q], mx = mix_x[q], mp = mix_p[q];
            for (int j = 0; j < d; ++j) {
                const size_t idx = static_cast<size_t>(i) * d + j;
                const double pred = s * X[idx] + c * Y[idx];
                out[idx] = mx * X[idx] + mp * pred;
            }
        }
    };
    return m;
}

int nfe_counter(ObjectiveKind obj) {
    return obj == ObjectiveKind::DsbOriginal ? 2 : 1;
}

double marginal_gap(const MeanFn& mean, Direction dir, const GammaSchedule& sched,
                    const Sampler& endpoints, const Sampler& reference, int n_paths,
                    uint64_t seed, int threads, bool* regularized) {
    if (n_paths < 100) throw InvalidArgument("marginal_gap: need n_paths >= 100");
    if (regularized) *regularized = false;
    const int d = mean.d;
    Rng end_rng(derive_seed(seed, {0xE1ul}));
    std::vector<double> ends = draw(endpoints, n_paths, end_rng);
    Rng chain_rng(derive_seed(seed, {0xE2ul}));
    TrajectoryBatch traj = (dir == Direction::Backward)
                               ? sample_backward(mean, sched, ends, chain_rng,
                                                 NoiseMode::Gamma, threads)
                               : sample_forward(mean, sched, ends, chain_rng,
                                                NoiseMode::Gamma, threads);
    const int term = (dir == Direction::Backward) ? 0 : sched.n_steps();
    std::vector<double> terminal(static_cast<size_t>(traj.n_paths) * d);
    for (int p = 0; p < traj.n_paths; ++p)
        std::copy(traj.state(p, term), traj.state(p, term) + d,
                  terminal.begin() + static_cast<size_t>(p) * d);

    Rng ref_rng(derive_seed(seed, {0xE3ul}));
    std::vector<double> refs = draw(reference, n_paths, ref_rng);

    GaussianMoments ga = fit_gaussian(terminal, d);
    GaussianMoments gb = fit_gaussian(refs, d);
    for (GaussianMoments* g : {&ga, &gb}) {
        if (nearly_singular(*g)) {
            for (int i = 0; i < d; ++i) g->cov[static_cast<size_t>(i) * d + i] += 1e-6;
            if (regularized) *regularized = true;
        }
    }
    return symmetric_gaussian_kl(ga, gb);
}

double marginal_gap(const BridgeModel& model, const Sampler& endpoints,
                    const Sampler& reference, int n_paths, uint64_t seed, int threads,
                    bool* regularized) {
    return marginal_gap(model.mean_fn(), model.dir, model.sched, endpoints, reference,
                        n_paths, seed, threads, regularized);
}

void write_metrics_csv(const std::string& path, const RunMetrics& metrics,
                       const std::string& config_hash) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("write_metrics_csv: cannot open " + path);
    std::fprintf(f, "# config_hash=%s\n", config_hash.c_str());
    std::fputs("half_epoch,loss,gap_fwd,gap_bwd,avg_kl,nfe,seconds\n", f);
    for (const auto& r : metrics.records)
        std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%lld,%.17g\n", r.half_epoch, r.loss,
                     r.gap_fwd, r.gap_bwd, r.avg_kl, r.nfe, r.seconds);
    if (std::fclose(f) != 0) throw IoError("write_metrics_csv: close failed for " + path);
}

RunMetrics read_metrics_csv(const std::string& path, std::string* config_hash) {
    std::ifstream f(path);
    if (!f) throw IoError("read_metrics_csv: cannot open " + path);
    std::string line;
    bool have_header = false;
    RunMetrics out;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# config_hash=";
            if (config_hash && line.rfind(key, 0) == 0) *config_hash = line.substr(key.size());
            continue;
        }
        if (!have_header) {
            if (line != "half_epoch,loss,gap_fwd,gap_bwd,avg_kl,nfe,seconds")
                throw IoError("read_metrics_csv: unexpected header in " + path);
            have_header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7)
            throw IoError("read_metrics_csv: malformed row " + std::to_string(lineno) + " in " +
                          path);
        HalfEpochRecord r;
        try {
            r.half_epoch = std::stoi(cells[0]);
            r.loss = std::stod(cells[1]);
            r.gap_fwd = std::stod(cells[2]);
            r.gap_bwd = std::stod(cells[3]);
            r.avg_kl = std::stod(cells[4]);
            r.nfe = std::stoll(cells[5]);
            r.seconds = std::stod(cells[6]);
        } catch (const std::exception&) {
            throw IoError("read_metrics_csv: malformed row " + std::to_string(lineno) + " in " +
                          path);
        }
        out.records.push_back(r);
    }
    if (!have_header) throw IoError("read_metrics_csv: missing header in " + path);
    if (!out.records.empty()) out.nfe_total = out.records.back().nfe;
    return out;
}

namespace {

std::string ckpt_path(const std::string& run_dir, int half, Direction dir) {
    return run_dir + "/half_" + std::to_string(half) +
           (dir == Direction::Forward ? "_F.sbck" : "_B.sbck");
}

void validate_config(const TrainConfig& cfg, const Sampler& data, const Sampler& prior,
                     const GammaSchedule& sched, const PretrainedSgm* init_b,
                     const PretrainedSgm* init_f) {
    if (data.d <= 0 || data.d != prior.d)
        throw InvalidArgument("train_ipf: sampler dimensions disagree");
    if (cfg.epochs < 0) throw InvalidArgument("train_ipf: epochs must be >= 0");
    if (cfg.steps_per_half <= 0 || cfg.batch_size <= 0 || cfg.cache_paths <= 0 ||
        cfg.cache_refresh <= 0)
        throw InvalidArgument("train_ipf: counts must be positive");
    if (!(cfg.lr > 0.0)) throw InvalidArgument("train_ipf: lr must be positive");
    if (cfg.threads < 1) throw InvalidArgument("train_ipf: threads must be >= 1");
    if ((cfg.objective == ObjectiveKind::Iptm || cfg.objective == ObjectiveKind::Ipfm) &&
        !sched.normalized())
        throw InvalidArgument("train_ipf: objective requires a normalized schedule");
    if (cfg.early_stop && (cfg.plateau_window <= 0 || !(cfg.plateau_rel > 0.0)))
        throw InvalidArgument("train_ipf: bad plateau settings");
    if (cfg.eval_paths < 100) throw InvalidArgument("train_ipf: eval_paths must be >= 100");
    if (!cfg.oracle_a.empty()) {
        if (static_cast<int>(cfg.oracle_a.size()) != data.d)
            throw InvalidArgument("train_ipf: oracle center dimension mismatch");
        if (cfg.eval_paths < 1000)
            throw InvalidArgument("train_ipf: averaged KL needs eval_paths >= 1000");
        if (cfg.eval_times < 2) throw InvalidArgument("train_ipf: eval_times must be >= 2");
    }
    if (cfg.stop_after_halves < 0)
        throw InvalidArgument("train_ipf: stop_after_halves must be >= 0");
    if (cfg.resume && cfg.run_dir.empty())
        throw InvalidArgument("train_ipf: resume needs a run directory");

    switch (cfg.init) {
        case InitMode::Random:
            if (init_b || init_f)
                throw InvalidArgument("train_ipf: random init given pretrained nets");
            break;
        case InitMode::BackwardOnly:
            if (!init_b || init_f)
                throw InvalidArgument("train_ipf: backward-only init needs exactly the backward net");
            break;
        case InitMode::Dual:
            if (!init_b || !init_f) throw InvalidArgument("train_ipf: dual init needs both nets");
            break;
    }
    const uint64_t want = schedule_hash(sched);
    if (init_b) {
        if (init_b->schedule_hash != want)
            throw InvalidArgument("train_ipf: backward init schedule mismatch");
        if (init_b->direction != SgmDirection::DataDirected)
            throw InvalidArgument("train_ipf: backward init must be data-directed");
        if (init_b->net.d_in() != data.d)
            throw InvalidArgument("train_ipf: backward init dimension mismatch");
    }
    if (init_f) {
        if (init_f->schedule_hash != want)
            throw InvalidArgument("train_ipf: forward init schedule mismatch");
        if (init_f->direction != SgmDirection::PriorDirected)
            throw InvalidArgument("train_ipf: forward init must be prior-directed");
        if (init_f->net.d_in() != data.d)
            throw InvalidArgument("train_ipf: forward init dimension mismatch");
    }
}

} // namespace

TrainResult train_ipf(const TrainConfig& cfg, const Sampler& data, const Sampler& prior,
                      const GammaSchedule& sched, const PretrainedSgm* init_backward,
                      const PretrainedSgm* init_forward, const TrainHooks* hooks) {
    validate_config(cfg, data, prior, sched, init_backward, init_forward);
    const int d = data.d;
    const int N = sched.n_steps();
    const double qnan = std::numeric_limits<double>::quiet_NaN();

    TrainResult result;
    BridgeModel& F = result.forward;
    BridgeModel& B = result.backward;
    F.dir = Direction::Forward;
    B.dir = Direction::Backward;
    F.obj = B.obj = cfg.objective;
    F.sched = B.sched = sched;
    B.sgm_wrapped = (cfg.init != InitMode::Random);
    F.sgm_wrapped = (cfg.init == InitMode::Dual);
    if (B.sgm_wrapped) {
        B.net = init_backward->net;
    } else {
        Rng r(derive_seed(cfg.seed, {11}));
        B.net = make_mlp(d, cfg.arch, N, r);
    }
    if (F.sgm_wrapped) {
        F.net = init_forward->net;
    } else {
        Rng r(derive_seed(cfg.seed, {10}));
        F.net = make_mlp(d, cfg.arch, N, r);
    }

    bool fwd_live = F.sgm_wrapped;
    bool bwd_live = B.sgm_wrapped;

    const int total_halves = 2 * cfg.epochs;
    const int last_half = (cfg.stop_after_halves > 0)
                              ? std::min(total_halves, cfg.stop_after_halves)
                              : total_halves;

    RunMetrics& metrics = result.metrics;
    int start_half = 1;

    if (!cfg.run_dir.empty()) std::filesystem::create_directories(cfg.run_dir);
    if (cfg.resume) {
        const std::string mpath = cfg.run_dir + "/metrics.csv";
        RunMetrics old;
        if (std::filesystem::exists(mpath)) old = read_metrics_csv(mpath);
        int done = 0;
        while (done < last_half) {
            const int h = done + 1;
            const bool row_ok = static_cast<int>(old.records.size()) >= h &&
                                old.records[static_cast<size_t>(h) - 1].half_epoch == h;
            if (!row_ok || !std::filesystem::exists(ckpt_path(cfg.run_dir, h, Direction::Forward)) ||
                !std::filesystem::exists(ckpt_path(cfg.run_dir, h, Direction::Backward)))
                break;
            done = h;
        }
        if (done > 0) {
            metrics.records.assign(old.records.begin(), old.records.begin() + done);
            Checkpoint cf = load_checkpoint(ckpt_path(cfg.run_dir, done, Direction::Forward));
            Checkpoint cb = load_checkpoint(ckpt_path(cfg.run_dir, done, Direction::Backward));
            const uint64_t want = schedule_hash(sched);
            if (schedule_hash(cf.sched) != want || schedule_hash(cb.sched) != want)
                throw InvalidArgument("train_ipf: resume checkpoints use a different schedule");
            F.net = cf.net;
            B.net = cb.net;
            fwd_live = true;                    // half 1 trains F
            bwd_live = bwd_live || done >= 2;   // half 2 trains B
            start_half = done + 1;
        }
    }

    long long nfe = metrics.records.empty() ? 0 : metrics.records.back().nfe;
    const double eps_total = 2.0 * sched.gamma_bars.back();

    for (int h = start_half; h <= last_half; ++h) {
        const auto t0 = std::chrono::steady_clock::now();
        const bool train_forward = (h % 2 == 1);
        BridgeModel& trainee = train_forward ? F : B;
        const BridgeModel& partner_model = train_forward ? B : F;
        const bool partner_live = train_forward ? bwd_live : fwd_live;
        const MeanFn partner =
            partner_live ? partner_model.mean_fn() : reference_mean("brownian", d);
        const Sampler& cache_endpoints = train_forward ? prior : data;
        const Direction traj_dir = train_forward ? Direction::Backward : Direction::Forward;
        const Direction train_dir = trainee.dir;

        AdamState adam = make_adam_state(trainee.net);
        MlpGrads grads = make_grads(trainee.net);
        MlpWorkspace ws;
        TrajectoryBatch cache;
        Rng tup_rng(derive_seed(cfg.seed, {static_cast<uint64_t>(h), 3}));

        const int Bn = cfg.batch_size;
        std::vector<int> qk(static_cast<size_t>(Bn)), tsteps(static_cast<size_t>(Bn)),
            qp(static_cast<size_t>(Bn));
        std::vector<double> Y(static_cast<size_t>(Bn) * d), dY(static_cast<size_t>(Bn) * d),
            dsb_targets(static_cast<size_t>(Bn) * d), p_in(static_cast<size_t>(Bn) * d),
            p_other(static_cast<size_t>(Bn) * d);
        std::vector<double> step_losses;
        if (cfg.early_stop) step_losses.reserve(static_cast<size_t>(cfg.steps_per_half));

        double loss_sum = 0.0;
        int steps_done = 0;

        for (int s = 0; s < cfg.steps_per_half; ++s) {
            if (s % cfg.cache_refresh == 0) {
                const uint64_t r = static_cast<uint64_t>(s / cfg.cache_refresh);
                Rng ep_rng(derive_seed(cfg.seed, {static_cast<uint64_t>(h), 1, r}));
                std::vector<double> ends = draw(cache_endpoints, cfg.cache_paths, ep_rng);
                Rng chain_rng(derive_seed(cfg.seed, {static_cast<uint64_t>(h), 2, r}));
                cache = (traj_dir == Direction::Backward)
                            ? sample_backward(partner, sched, ends, chain_rng,
                                              NoiseMode::Gamma, cfg.threads)
                            : sample_forward(partner, sched, ends, chain_rng,
                                             NoiseMode::Gamma, cfg.threads);
            }

            TupleBatch tup = subsample_pairs(cache, cfg.objective, sched, Bn, tup_rng);
            const int n = tup.n;
            for (int i = 0; i < n; ++i) {
                const int k = tup.ks[static_cast<size_t>(i)];
                qk[static_cast<size_t>(i)] = (train_dir == Direction::Backward) ? k + 1 : k;
                tsteps[static_cast<size_t>(i)] = trainee.net_tstep(qk[static_cast<size_t>(i)]);
            }

            const double* tgt;
            if (cfg.objective == ObjectiveKind::DsbOriginal) {
                for (int i = 0; i < n; ++i) {
                    const int k = tup.ks[static_cast<size_t>(i)];
                    qp[static_cast<size_t>(i)] = (train_dir == Direction::Backward) ? k : k + 1;
                }
                partner.fn(qp.data(), tup.other.data(), n, p_other.data());
                nfe += n;
                partner.fn(qp.data(), tup.inputs.data(), n, p_in.data());
                nfe += n;
                for (size_t idx = 0; idx < static_cast<size_t>(n) * d; ++idx)
                    dsb_targets[idx] = tup.inputs[idx] + (p_other[idx] - p_in[idx]);
                tgt = dsb_targets.data();
            } else {
                tgt = tup.targets.data();
                nfe += n;
            }

            mlp_forward(trainee.net, tsteps.data(), tup.inputs.data(), n, Y.data(), &ws);
            double loss = 0.0;
            const double scale = 2.0 / (static_cast<double>(n) * d);
            for (int i = 0; i < n; ++i) {
                const int q = qk[static_cast<size_t>(i)];
                const double skip = trainee.head_skip(q);
                const double coeff = trainee.head_coeff(q);
                for (int j = 0; j < d; ++j) {
                    const size_t idx = static_cast<size_t>(i) * d + j;
                    const double pred = skip * tup.inputs[idx] + coeff * Y[idx];
                    const double r = pred - tgt[idx];
                    loss += r * r;
                    dY[idx] = scale * coeff * r;
                }
            }
            loss /= static_cast<double>(n) * d;
            if (!std::isfinite(loss))
                throw NumericError("train_ipf: loss diverged at half-epoch " + std::to_string(h));

            grads.zero();
            mlp_backward(trainee.net, ws, dY.data(), n, grads);
            adam_step(trainee.net, grads, adam, cfg.lr);
            loss_sum += loss;
            ++steps_done;

            if (cfg.early_stop) {
                step_losses.push_back(loss);
                const int w = cfg.plateau_window;
                if (steps_done >= 2 * w && steps_done % w == 0) {
                    double prev = 0.0, cur = 0.0;
                    for (int i = steps_done - 2 * w; i < steps_done - w; ++i)
                        prev += step_losses[static_cast<size_t>(i)];
                    for (int i = steps_done - w; i < steps_done; ++i)
                        cur += step_losses[static_cast<size_t>(i)];
                    prev /= w;
                    cur /= w;
                    if (prev - cur < cfg.plateau_rel * std::abs(prev)) break;
                }
            }
        }

        if (train_forward)
            fwd_live = true;
        else
            bwd_live = true;

        HalfEpochRecord rec;
        rec.half_epoch = h;
        rec.loss = loss_sum / steps_done;
        rec.nfe = nfe;
        rec.gap_fwd = fwd_live ? marginal_gap(F, data, prior, cfg.eval_paths,
                                              derive_seed(cfg.eval_seed, {1}), cfg.threads)
                               : qnan;
        rec.gap_bwd = bwd_live ? marginal_gap(B, prior, data, cfg.eval_paths,
                                              derive_seed(cfg.eval_seed, {2}), cfg.threads)
                               : qnan;
        if (!cfg.oracle_a.empty()) {
            const BridgeModel& just = train_forward ? F : B;
            const Sampler& ends = train_forward ? data : prior;
            rec.avg_kl = averaged_kl_chain(just.mean_fn(), just.dir, sched, ends, cfg.oracle_a,
                                           eps_total, cfg.eval_times, cfg.eval_paths,
                                           derive_seed(cfg.eval_seed, {3}), cfg.threads);
        } else {
            rec.avg_kl = qnan;
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        metrics.records.push_back(rec);
        metrics.nfe_total = nfe;

        if (!cfg.run_dir.empty()) {
            save_checkpoint(ckpt_path(cfg.run_dir, h, Direction::Forward), F.net, sched,
                            kTagBridgeForward, cfg.seed);
            save_checkpoint(ckpt_path(cfg.run_dir, h, Direction::Backward), B.net, sched,
                            kTagBridgeBackward, cfg.seed);
            write_metrics_csv(cfg.run_dir + "/metrics.csv", metrics, cfg.config_hash);
        }
        if (hooks && hooks->after_half) hooks->after_half(rec, F, B);
    }

    metrics.nfe_total = nfe;
    return result;
}

} // namespace sblab
