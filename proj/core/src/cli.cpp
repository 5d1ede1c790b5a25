#include "sblab/cli.hpp"

#include "sblab/chain.hpp"
#include "sblab/checkpoint.hpp"
#include "sblab/config.hpp"
#include "sblab/errors.hpp"
#include "sblab/oracle.hpp"
#include "sblab/plot.hpp"
#include "sblab/sgm_init.hpp"
#include "sblab/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace sblab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int env_thread_cap() {
    const char* v = std::getenv("SBLAB_THREADS");
    if (!v || !*v) return 0;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1)
        throw InvalidArgument("SBLAB_THREADS must be a positive integer");
    return static_cast<int>(n);
}

int effective_threads(int requested) {
    const int cap = env_thread_cap();
    int t = std::max(requested, 1);
    if (cap > 0) t = std::min(t, cap);
    return t;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << content;
    if (!f) throw IoError("write failed: " + path);
}

void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

// Relative artifact names land inside the output directory.
std::string resolve_out(const std::string& out_dir, const std::string& name) {
    fs::path p(name);
    if (p.is_absolute()) return name;
    return (fs::path(out_dir) / p).string();
}

double jnum(double v) { return std::isfinite(v) ? v : 0.0; }

json metric_or_null(double v) {
    if (std::isfinite(v)) return json(v);
    return json(nullptr);
}

json sampler_spec_json(const SamplerSpec& s) {
    return json{{"kind", s.kind},   {"d", s.d},         {"seed", s.seed},
                {"a", s.a},         {"centers", s.centers}, {"sigma", s.sigma},
                {"cells", s.cells}, {"scale", s.scale}, {"noise", s.noise}};
}

// Reproducibility snapshot written next to every run's artifacts.
json config_json(const RunConfig& cfg, const std::string& hash) {
    const TrainConfig& t = cfg.train;
    json j;
    j["config_hash"] = hash;
    j["data"] = sampler_spec_json(cfg.data);
    j["prior"] = sampler_spec_json(cfg.prior);
    j["schedule"] = {{"type", cfg.schedule.type},
                     {"n", cfg.schedule.n},
                     {"gamma_min", cfg.schedule.gamma_min},
                     {"gamma_max", cfg.schedule.gamma_max},
                     {"normalize", cfg.schedule.normalize}};
    j["train"] = {{"objective", objective_name(t.objective)},
                  {"init", init_mode_name(t.init)},
                  {"epochs", t.epochs},
                  {"steps_per_half", t.steps_per_half},
                  {"batch_size", t.batch_size},
                  {"lr", t.lr},
                  {"cache_paths", t.cache_paths},
                  {"cache_refresh", t.cache_refresh},
                  {"hidden", t.arch.hidden},
                  {"layers", t.arch.layers},
                  {"embed_dim", t.arch.embed_dim},
                  {"activation", t.arch.activation == kActTanh ? "tanh" : "silu"},
                  {"seed", t.seed},
                  {"early_stop", t.early_stop},
                  {"plateau_rel", t.plateau_rel},
                  {"plateau_window", t.plateau_window}};
    j["eval"] = {{"n_paths", t.eval_paths},
                 {"n_eval_times", t.eval_times},
                 {"seed", t.eval_seed},
                 {"oracle", cfg.oracle}};
    j["init"] = {{"backward", cfg.init_backward_path}, {"forward", cfg.init_forward_path}};
    j["out"] = {{"dir", cfg.out_dir}};
    j["pretrain"] = {{"steps", cfg.pretrain.steps},
                     {"batch_size", cfg.pretrain.batch_size},
                     {"lr", cfg.pretrain.lr},
                     {"dual", cfg.pretrain.dual},
                     {"backward_out", cfg.pretrain.backward_out},
                     {"forward_out", cfg.pretrain.forward_out}};
    return j;
}

int cmd_pretrain(const RunConfig& cfg) {
    const GammaSchedule sched = cfg.schedule.build();
    const Sampler data = cfg.data_sampler();
    const Sampler prior = cfg.prior_sampler();
    const std::string hash = config_hash_hex(cfg);
    PretrainBudget budget;
    budget.steps = cfg.pretrain.steps;
    budget.batch_size = cfg.pretrain.batch_size;
    budget.lr = cfg.pretrain.lr;
    budget.arch = cfg.train.arch;

    fs::create_directories(cfg.out_dir);

    json summary;
    summary["config_hash"] = hash;

    double loss_b = 0.0;
    Rng rng_b(derive_seed(cfg.train.seed, {20}));
    const PretrainedSgm mb = pretrain_flow_sgm(data, prior, sched, budget, rng_b,
                                               SgmDirection::DataDirected, &loss_b);
    const std::string path_b = resolve_out(cfg.out_dir, cfg.pretrain.backward_out);
    save_sgm(path_b, mb, sched, cfg.train.seed);
    summary["backward"] = {{"path", path_b},
                           {"direction", "data-directed"},
                           {"steps", budget.steps},
                           {"final_loss", jnum(loss_b)}};

    if (cfg.pretrain.dual) {
        double loss_f = 0.0;
        Rng rng_f(derive_seed(cfg.train.seed, {21}));
        const PretrainedSgm mf = pretrain_flow_sgm(prior, data, sched, budget, rng_f,
                                                   SgmDirection::PriorDirected, &loss_f);
        const std::string path_f = resolve_out(cfg.out_dir, cfg.pretrain.forward_out);
        save_sgm(path_f, mf, sched, cfg.train.seed);
        summary["forward"] = {{"path", path_f},
                              {"direction", "prior-directed"},
                              {"steps", budget.steps},
                              {"final_loss", jnum(loss_f)}};
    }

    write_json((fs::path(cfg.out_dir) / "pretrain_summary.json").string(), summary);
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    const GammaSchedule sched = cfg.schedule.build();
    const Sampler data = cfg.data_sampler();
    const Sampler prior = cfg.prior_sampler();
    TrainConfig tc = cfg.resolved_train();
    tc.threads = effective_threads(tc.threads);

    std::optional<PretrainedSgm> init_b, init_f;
    if (tc.init != InitMode::Random) {
        if (cfg.init_backward_path.empty())
            throw InvalidArgument("train: init.backward checkpoint path required");
        init_b = load_sgm(cfg.init_backward_path);
    }
    if (tc.init == InitMode::Dual) {
        if (cfg.init_forward_path.empty())
            throw InvalidArgument("train: init.forward checkpoint path required");
        init_f = load_sgm(cfg.init_forward_path);
    }

    fs::create_directories(cfg.out_dir);
    write_json((fs::path(cfg.out_dir) / "config_used.json").string(),
               config_json(cfg, tc.config_hash));

    const TrainResult res = train_ipf(tc, data, prior, sched,
                                      init_b ? &*init_b : nullptr,
                                      init_f ? &*init_f : nullptr);

    if (res.metrics.records.empty()) {
        // Zero-epoch run: persist the initialization state explicitly.
        save_checkpoint((fs::path(cfg.out_dir) / "half_0_F.sbck").string(),
                        res.forward.net, sched, kTagBridgeForward, tc.seed);
        save_checkpoint((fs::path(cfg.out_dir) / "half_0_B.sbck").string(),
                        res.backward.net, sched, kTagBridgeBackward, tc.seed);
        write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), res.metrics,
                          tc.config_hash);
    }

    json report;
    report["config_hash"] = tc.config_hash;
    report["objective"] = objective_name(tc.objective);
    report["init"] = init_mode_name(tc.init);
    report["half_epochs"] = res.metrics.records.size();
    report["nfe_total"] = res.metrics.nfe_total;
    if (!res.metrics.records.empty()) {
        const HalfEpochRecord& last = res.metrics.records.back();
        report["final"] = {{"half_epoch", last.half_epoch},
                           {"loss", jnum(last.loss)},
                           {"gap_fwd", metric_or_null(last.gap_fwd)},
                           {"gap_bwd", metric_or_null(last.gap_bwd)},
                           {"avg_kl", metric_or_null(last.avg_kl)}};
    }
    report["run_dir"] = cfg.out_dir;
    write_json((fs::path(cfg.out_dir) / "report.json").string(), report);
    std::cout << report.dump(2) << "\n";
    return 0;
}

// Rebuild the trained heads around raw checkpoint weights; objective and
// init mode come from the config, matching how the run that wrote the
// checkpoints constructed its models.
BridgeModel model_from_checkpoint(const Checkpoint& ck, Direction dir, const RunConfig& cfg,
                                  const GammaSchedule& sched) {
    if (schedule_hash(ck.sched) != schedule_hash(sched))
        throw InvalidArgument("checkpoint schedule does not match the config schedule");
    BridgeModel m;
    m.net = ck.net;
    m.dir = dir;
    m.obj = cfg.train.objective;
    m.sgm_wrapped = (dir == Direction::Backward) ? (cfg.train.init != InitMode::Random)
                                                 : (cfg.train.init == InitMode::Dual);
    m.sched = sched;
    return m;
}

int cmd_eval(const RunConfig& cfg, const std::string& fwd_path, const std::string& bwd_path,
             const std::string& out_dir) {
    const GammaSchedule sched = cfg.schedule.build();
    const Sampler data = cfg.data_sampler();
    const Sampler prior = cfg.prior_sampler();
    const TrainConfig tc = cfg.resolved_train();
    const int threads = effective_threads(tc.threads);

    const Checkpoint cf = load_checkpoint(fwd_path);
    const Checkpoint cb = load_checkpoint(bwd_path);
    if (cf.tag != kTagBridgeForward)
        throw InvalidArgument("eval: --forward expects a forward bridge checkpoint");
    if (cb.tag != kTagBridgeBackward)
        throw InvalidArgument("eval: --backward expects a backward bridge checkpoint");
    const BridgeModel F = model_from_checkpoint(cf, Direction::Forward, cfg, sched);
    const BridgeModel B = model_from_checkpoint(cb, Direction::Backward, cfg, sched);

    const double gap_fwd = marginal_gap(F, data, prior, tc.eval_paths,
                                        derive_seed(tc.eval_seed, {1}), threads);
    const double gap_bwd = marginal_gap(B, prior, data, tc.eval_paths,
                                        derive_seed(tc.eval_seed, {2}), threads);
    double avg_kl = std::numeric_limits<double>::quiet_NaN();
    if (!tc.oracle_a.empty()) {
        const double eps_total = 2.0 * sched.gamma_bars.back();
        avg_kl = averaged_kl_metric(B.mean_fn(), sched, prior, tc.oracle_a, eps_total,
                                    tc.eval_times, tc.eval_paths,
                                    derive_seed(tc.eval_seed, {3}), threads);
    }

    fs::create_directories(out_dir);
    json j;
    j["config_hash"] = tc.config_hash;
    j["forward_checkpoint"] = fwd_path;
    j["backward_checkpoint"] = bwd_path;
    j["n_paths"] = tc.eval_paths;
    j["n_eval_times"] = tc.eval_times;
    j["eval_seed"] = tc.eval_seed;
    j["gap_fwd"] = metric_or_null(gap_fwd);
    j["gap_bwd"] = metric_or_null(gap_bwd);
    j["avg_kl"] = metric_or_null(avg_kl);
    write_json((fs::path(out_dir) / "eval.json").string(), j);

    std::string csv = "# config_hash=" + tc.config_hash + "\nmetric,value\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "gap_fwd,%.17g\n", gap_fwd);
    csv += buf;
    std::snprintf(buf, sizeof buf, "gap_bwd,%.17g\n", gap_bwd);
    csv += buf;
    std::snprintf(buf, sizeof buf, "avg_kl,%.17g\n", avg_kl);
    csv += buf;
    write_text((fs::path(out_dir) / "eval.csv").string(), csv);

    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_sample(const RunConfig& cfg, const std::string& ckpt_path, int n_paths,
               const std::string& out_path, const std::string& direction_flag) {
    if (n_paths < 1) throw InvalidArgument("sample: --n must be >= 1");
    const GammaSchedule sched = cfg.schedule.build();
    const Sampler data = cfg.data_sampler();
    const Sampler prior = cfg.prior_sampler();
    const TrainConfig tc = cfg.resolved_train();
    const int threads = effective_threads(tc.threads);

    const Checkpoint ck = load_checkpoint(ckpt_path);
    MeanFn mean;
    Direction dir;
    switch (ck.tag) {
        case kTagBridgeForward:
            dir = Direction::Forward;
            mean = model_from_checkpoint(ck, dir, cfg, sched).mean_fn();
            break;
        case kTagBridgeBackward:
            dir = Direction::Backward;
            mean = model_from_checkpoint(ck, dir, cfg, sched).mean_fn();
            break;
        case kTagDataDirected:
            dir = Direction::Backward;
            mean = wrap_backward_init(sgm_from_checkpoint(ck), sched);
            break;
        case kTagPriorDirected:
            dir = Direction::Forward;
            mean = wrap_forward_init(sgm_from_checkpoint(ck), sched);
            break;
        default:
            throw InvalidArgument("sample: checkpoint carries no sampling direction");
    }
    if (!direction_flag.empty()) {
        const Direction want = (direction_flag == "forward") ? Direction::Forward
                             : (direction_flag == "backward")
                                 ? Direction::Backward
                                 : throw InvalidArgument(
                                       "sample: --direction must be forward or backward");
        if (want != dir)
            throw InvalidArgument("sample: checkpoint direction does not match --direction");
    }

    const Sampler& endpoints = (dir == Direction::Forward) ? data : prior;
    Rng end_rng(derive_seed(tc.eval_seed, {4}));
    const std::vector<double> ends = draw(endpoints, n_paths, end_rng);
    Rng chain_rng(derive_seed(tc.eval_seed, {5}));
    const TrajectoryBatch traj =
        (dir == Direction::Forward)
            ? sample_forward(mean, sched, ends, chain_rng, NoiseMode::Gamma, threads)
            : sample_backward(mean, sched, ends, chain_rng, NoiseMode::Gamma, threads);

    if (out_path.find('/') != std::string::npos)
        fs::create_directories(fs::path(out_path).parent_path());
    write_trajectory_csv(out_path, traj, schedule_hash(sched), tc.config_hash);
    json j;
    j["config_hash"] = tc.config_hash;
    j["trajectory"] = out_path;
    j["n_paths"] = traj.n_paths;
    j["dropped"] = traj.dropped;
    j["direction"] = direction_name(dir);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_oracle_check(int n_pins, const std::string& out_path) {
    if (n_pins < 1) throw InvalidArgument("oracle-check: --pins must be >= 1");
    json report;

    // Closed-form cross-covariance vs the discrete Sinkhorn solution of the
    // 1-D problem N(1, 1) <-> N(-1, 1) at eps = 2 on a 401-point grid.
    const double eps = 2.0;
    const double c_closed = entropic_cross_covariance(eps);
    const std::vector<double> grid = linspace(-6.0, 6.0, 401);
    const std::vector<double> hp = discretize_gaussian(1.0, 1.0, grid);
    const std::vector<double> hq = discretize_gaussian(-1.0, 1.0, grid);
    const std::vector<double> cost = quadratic_cost(grid, grid);
    DiscreteCoupling coupling = sinkhorn_coupling(hp, hq, cost, 401, 401, eps, 4000, 1e-10);
    coupling.grid_x = grid;
    coupling.grid_y = grid;
    const double c_sink = coupling_cross_covariance(coupling);
    const double c_err = std::abs(c_sink - c_closed);
    report["cross_covariance"] = {{"eps", eps},
                                  {"closed_form", c_closed},
                                  {"sinkhorn", c_sink},
                                  {"abs_err", c_err},
                                  {"tol", 1e-2},
                                  {"sinkhorn_iters", coupling.iters},
                                  {"sinkhorn_marginal_err", coupling.marginal_err}};

    // Analytic endpoints must reproduce the boundary marginals exactly.
    const std::vector<double> a{1.0, 1.0};
    const GaussianMoments m0 = analytic_sb_marginal(a, 0.0, eps);
    const GaussianMoments m1 = analytic_sb_marginal(a, 1.0, eps);
    double end_err = 0.0;
    for (int i = 0; i < 2; ++i) {
        end_err = std::max(end_err, std::abs(m0.mean[static_cast<size_t>(i)] - 1.0));
        end_err = std::max(end_err, std::abs(m1.mean[static_cast<size_t>(i)] + 1.0));
        for (int j = 0; j < 2; ++j) {
            const double want = (i == j) ? 1.0 : 0.0;
            end_err = std::max(end_err,
                               std::abs(m0.cov[static_cast<size_t>(i) * 2 + j] - want));
            end_err = std::max(end_err,
                               std::abs(m1.cov[static_cast<size_t>(i) * 2 + j] - want));
        }
    }
    report["endpoints"] = {{"max_abs_err", end_err}, {"tol", 0.0}};

    // Step-posterior closed form vs joint-Gaussian brute force.
    const GammaSchedule sched = make_symmetric_schedule(6, 1.0, 3.0, true);
    Rng rng(0x0c0ffeeULL);
    double d_mu = 0.0, d_var = 0.0;
    for (int trial = 0; trial < n_pins; ++trial) {
        const int k = static_cast<int>(rng.below(static_cast<uint64_t>(sched.n_steps())));
        std::vector<double> pin(2), cur(2);
        for (auto* v : {&pin, &cur})
            for (double& x : *v) x = 2.0 * rng.normal();
        for (const Direction dir : {Direction::Backward, Direction::Forward}) {
            const PosteriorParams got = posterior_params(dir, k, pin, cur, sched);
            std::vector<std::pair<int, std::vector<double>>> pins;
            int query;
            if (dir == Direction::Backward) {
                pins = {{0, pin}, {k + 1, cur}};
                query = k;
            } else {
                pins = {{k, cur}, {sched.n_steps(), pin}};
                query = k + 1;
            }
            const PosteriorParams want = chain_conditioning_bruteforce(sched, query, pins);
            for (int j = 0; j < 2; ++j)
                d_mu = std::max(d_mu, std::abs(got.mean[static_cast<size_t>(j)] -
                                               want.mean[static_cast<size_t>(j)]));
            d_var = std::max(d_var, std::abs(got.variance - want.variance));
        }
    }
    report["posterior"] = {{"pins", n_pins},
                           {"max_mean_err", d_mu},
                           {"max_var_err", d_var},
                           {"tol", 1e-9}};

    const bool ok = c_err < 1e-2 && end_err == 0.0 && d_mu < 1e-9 && d_var < 1e-9;
    report["ok"] = ok;
    if (!out_path.empty()) {
        if (out_path.find('/') != std::string::npos)
            fs::create_directories(fs::path(out_path).parent_path());
        write_json(out_path, report);
    }
    std::cout << report.dump(2) << "\n";
    return ok ? 0 : 1;
}

int cmd_plot(const std::string& traj_path, const std::string& run_dir,
             const std::string& out_dir) {
    if (traj_path.empty() && run_dir.empty())
        throw InvalidArgument("plot: give --trajectory and/or --run-dir");
    fs::create_directories(out_dir);
    json j;
    j["written"] = json::array();
    if (!traj_path.empty()) {
        const TrajectoryBatch traj = read_trajectory_csv(traj_path);
        const std::string fan = (fs::path(out_dir) / "trajectories.svg").string();
        write_text(fan, svg_trajectory_fan(traj));
        const std::string sc = (fs::path(out_dir) / "boundaries.svg").string();
        write_text(sc, svg_boundary_scatter(traj));
        j["written"].push_back(fan);
        j["written"].push_back(sc);
    }
    if (!run_dir.empty()) {
        const RunMetrics metrics =
            read_metrics_csv((fs::path(run_dir) / "metrics.csv").string());
        const std::string kl = (fs::path(out_dir) / "kl_curve.svg").string();
        write_text(kl, svg_kl_curve(metrics));
        j["written"].push_back(kl);
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required) {
    auto* opt = cmd->add_option("-c,--config", o.config_path,
                                "Run config file (.toml or .json)");
    if (config_required) opt->required();
    cmd->add_option("--set", o.sets,
                    "Override a config entry, e.g. --set train.seed=7 (repeatable)");
}

RunConfig load_cfg(const CommonOpts& o) {
    return load_run_config(o.config_path, o.sets);
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Schrodinger bridge training lab"};
    app.require_subcommand(1);

    CommonOpts pre_o, train_o, eval_o, sample_o, plot_o;
    std::string eval_fwd, eval_bwd, eval_out = "eval";
    std::string sample_ckpt, sample_out = "trajectory.csv", sample_dir_flag;
    int sample_n = 256;
    std::string train_out_dir;
    bool train_resume = false;
    int oracle_pins = 20;
    std::string oracle_out;
    std::string plot_traj, plot_run, plot_out = "plots";

    CLI::App* pre = app.add_subcommand("pretrain", "Train flow nets for initialization");
    add_common(pre, pre_o, true);

    CLI::App* train = app.add_subcommand("train", "Run iterative proportional fitting");
    add_common(train, train_o, true);
    train->add_option("--out-dir", train_out_dir, "Override the output directory");
    train->add_flag("--resume", train_resume, "Continue from checkpoints in the run dir");

    CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint pair");
    add_common(ev, eval_o, true);
    ev->add_option("--forward", eval_fwd, "Forward bridge checkpoint")->required();
    ev->add_option("--backward", eval_bwd, "Backward bridge checkpoint")->required();
    ev->add_option("--out-dir", eval_out, "Output directory for eval.json / eval.csv");

    CLI::App* sample = app.add_subcommand("sample", "Sample trajectories from a checkpoint");
    add_common(sample, sample_o, true);
    sample->add_option("--checkpoint", sample_ckpt, "Checkpoint to sample from")->required();
    sample->add_option("-n,--n", sample_n, "Number of paths");
    sample->add_option("--out", sample_out, "Trajectory CSV output path");
    sample->add_option("--direction", sample_dir_flag, "Expected direction (forward/backward)");

    CLI::App* oc = app.add_subcommand("oracle-check", "Self-consistency report of the oracles");
    oc->add_option("--pins", oracle_pins, "Random pin count for the posterior check");
    oc->add_option("--out", oracle_out, "Write the JSON report here as well");

    CLI::App* plot = app.add_subcommand("plot", "Render SVG figures");
    plot->add_option("--trajectory", plot_traj, "Trajectory CSV to render");
    plot->add_option("--run-dir", plot_run, "Run directory holding metrics.csv");
    plot->add_option("--out-dir", plot_out, "Directory for the SVG files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (pre->parsed()) return cmd_pretrain(load_cfg(pre_o));
        if (train->parsed()) {
            if (!train_out_dir.empty()) train_o.sets.push_back("out.dir=\"" + train_out_dir + "\"");
            if (train_resume) train_o.sets.push_back("train.resume=true");
            return cmd_train(load_cfg(train_o));
        }
        if (ev->parsed()) return cmd_eval(load_cfg(eval_o), eval_fwd, eval_bwd, eval_out);
        if (sample->parsed())
            return cmd_sample(load_cfg(sample_o), sample_ckpt, sample_n, sample_out,
                              sample_dir_flag);
        if (oc->parsed()) return cmd_oracle_check(oracle_pins, oracle_out);
        if (plot->parsed()) return cmd_plot(plot_traj, plot_run, plot_out);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace sblab
