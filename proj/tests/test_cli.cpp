// End-to-end command-line checks: exit codes, the pretrain/train/eval/
// sample/plot pipeline, overrides, resume, and the thread cap.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sblab/chain.hpp"
#include "sblab/checkpoint.hpp"
#include "sblab/trainer.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace sblab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cmd(const std::string& args, const std::string& env_prefix = "") {
    const std::string cmd =
        env_prefix + std::string(SBLAB_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    REQUIRE(bool(f));
    f << content;
}

std::string base_toml(const std::string& out_dir) {
    return std::string("[data]\n"
                       "kind = \"shifted_gaussian\"\n"
                       "d = 2\n"
                       "a = [1.0, 1.0]\n"
                       "seed = 1\n"
                       "\n"
                       "[prior]\n"
                       "kind = \"shifted_gaussian\"\n"
                       "d = 2\n"
                       "a = [-1.0, -1.0]\n"
                       "seed = 2\n"
                       "\n"
                       "[schedule]\n"
                       "type = \"symmetric\"\n"
                       "n = 8\n"
                       "gamma_min = 1.0\n"
                       "gamma_max = 4.0\n"
                       "normalize = true\n"
                       "\n"
                       "[train]\n"
                       "objective = \"ipfm\"\n"
                       "epochs = 1\n"
                       "steps_per_half = 40\n"
                       "batch_size = 32\n"
                       "lr = 1e-3\n"
                       "cache_paths = 200\n"
                       "cache_refresh = 50\n"
                       "hidden = 32\n"
                       "layers = 3\n"
                       "embed_dim = 8\n"
                       "activation = \"silu\"\n"
                       "seed = 5\n"
                       "threads = 1\n"
                       "\n"
                       "[eval]\n"
                       "n_paths = 1200\n"
                       "n_eval_times = 4\n"
                       "\n"
                       "[pretrain]\n"
                       "steps = 120\n"
                       "batch_size = 64\n"
                       "lr = 1e-3\n"
                       "dual = true\n"
                       "backward_out = \"m_b.sbck\"\n"
                       "forward_out = \"m_f.sbck\"\n"
                       "\n"
                       "[out]\n"
                       "dir = \"") +
           out_dir + "\"\n";
}

bool same_record(const HalfEpochRecord& a, const HalfEpochRecord& b) {
    auto same = [](double x, double y) {
        return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    return a.half_epoch == b.half_epoch && same(a.loss, b.loss) &&
           same(a.gap_fwd, b.gap_fwd) && same(a.gap_bwd, b.gap_bwd) &&
           same(a.avg_kl, b.avg_kl) && a.nfe == b.nfe;
}

std::vector<char> file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(bool(f));
    return std::vector<char>(std::istreambuf_iterator<char>(f),
                             std::istreambuf_iterator<char>());
}

json read_json(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(bool(f));
    return json::parse(f);
}

// eval.csv: "# config_hash=..." then "metric,value" rows.
double eval_csv_value(const std::string& path, const std::string& metric) {
    std::ifstream f(path);
    REQUIRE(bool(f));
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind(metric + ",", 0) == 0)
            return std::stod(line.substr(metric.size() + 1));
    }
    FAIL("metric ", metric, " not found in ", path);
    return 0.0;
}

} // namespace

TEST_CASE("argument and configuration failures use distinct exit codes") {
    TempDir tmp("sblab_cli_errors");
    CHECK(run_cmd("--help") == 0);
    CHECK(run_cmd("") == 2);                  // a subcommand is required
    CHECK(run_cmd("frobnicate") == 2);        // unknown subcommand
    CHECK(run_cmd("train") == 2);             // missing --config
    CHECK(run_cmd("train --nope") == 2);      // unknown flag
    CHECK(run_cmd("train -c " + tmp.sub("absent.toml")) == 4); // unreadable file

    write_file(tmp.sub("bad_key.toml"), "[train]\nlearning_rate = 1.0\n");
    CHECK(run_cmd("train -c " + tmp.sub("bad_key.toml")) == 2);

    write_file(tmp.sub("ok.toml"), base_toml(tmp.sub("run")));
    CHECK(run_cmd("train -c " + tmp.sub("ok.toml") + " --set train.seed") == 2);
    CHECK(run_cmd("train -c " + tmp.sub("ok.toml") + " --set nodot=3") == 2);
    CHECK(run_cmd("oracle-check --pins 0") == 2);
    CHECK(run_cmd("plot --out-dir " + tmp.sub("p")) == 2); // needs an input
    CHECK(run_cmd("sample -c " + tmp.sub("ok.toml") + " --checkpoint " +
                  tmp.sub("absent.sbck")) == 4);
}

TEST_CASE("oracle self-check passes and writes its report") {
    TempDir tmp("sblab_cli_oracle");
    const std::string out = tmp.sub("oracle.json");
    CHECK(run_cmd("oracle-check --pins 10 --out " + out) == 0);
    const json j = read_json(out);
    CHECK(j.at("ok").get<bool>() == true);
    CHECK(j.at("cross_covariance").at("abs_err").get<double>() < 1e-2);
    CHECK(j.at("posterior").at("max_var_err").get<double>() < 1e-9);
}

TEST_CASE("pipeline: pretrain, train, eval, sample, plot, resume") {
    TempDir tmp("sblab_cli_pipeline");
    const std::string cfg = tmp.sub("cfg.toml");
    const std::string base = tmp.sub("base");
    write_file(cfg, base_toml(base));

    // Pretrained flow nets for both directions.
    REQUIRE(run_cmd("pretrain -c " + cfg) == 0);
    REQUIRE(fs::exists(base + "/m_b.sbck"));
    REQUIRE(fs::exists(base + "/m_f.sbck"));
    const json pre = read_json(base + "/pretrain_summary.json");
    CHECK(pre.contains("backward"));
    CHECK(pre.contains("forward"));
    CHECK(pre.at("backward").at("final_loss").get<double>() >= 0.0);

    // Scratch training run.
    const std::string run = tmp.sub("run");
    REQUIRE(run_cmd("train -c " + cfg + " --out-dir " + run) == 0);
    for (const char* name : {"half_1_F.sbck", "half_1_B.sbck", "half_2_F.sbck",
                             "half_2_B.sbck", "metrics.csv", "config_used.json",
                             "report.json"})
        CHECK(fs::exists(fs::path(run) / name));

    std::string hash;
    const RunMetrics metrics = read_metrics_csv(run + "/metrics.csv", &hash);
    REQUIRE(metrics.records.size() == 2);
    CHECK(!hash.empty());
    CHECK(metrics.nfe_total == 2 * 40 * 32); // one evaluation per target
    const HalfEpochRecord& last = metrics.records[1];
    CHECK(std::isfinite(last.avg_kl)); // mirrored Gaussians: oracle auto-enabled
    CHECK(std::isfinite(last.gap_fwd));
    CHECK(std::isfinite(last.gap_bwd));

    const json report = read_json(run + "/report.json");
    CHECK(report.at("config_hash").get<std::string>() == hash);
    CHECK(report.at("nfe_total").get<long long>() == metrics.nfe_total);
    CHECK(report.at("final").at("avg_kl").get<double>() == last.avg_kl);

    // A dual-init run consumes the pretrained nets.
    const std::string run_dual = tmp.sub("run_dual");
    REQUIRE(run_cmd("train -c " + cfg + " --out-dir " + run_dual +
                    " --set 'train.init=\"dual\"'" + " --set 'init.backward=\"" + base +
                    "/m_b.sbck\"'" + " --set 'init.forward=\"" + base + "/m_f.sbck\"'") == 0);
    const RunMetrics dual = read_metrics_csv(run_dual + "/metrics.csv");
    REQUIRE(dual.records.size() == 2);
    CHECK(std::isfinite(dual.records[0].gap_bwd)); // wrapped backward is live at once

    // Offline evaluation reproduces the recorded metrics (common random numbers).
    const std::string eval_dir = tmp.sub("eval_out");
    REQUIRE(run_cmd("eval -c " + cfg + " --forward " + run + "/half_2_F.sbck" +
                    " --backward " + run + "/half_2_B.sbck --out-dir " + eval_dir) == 0);
    CHECK(eval_csv_value(eval_dir + "/eval.csv", "gap_fwd") == last.gap_fwd);
    CHECK(eval_csv_value(eval_dir + "/eval.csv", "gap_bwd") == last.gap_bwd);
    CHECK(eval_csv_value(eval_dir + "/eval.csv", "avg_kl") == last.avg_kl);
    const json ej = read_json(eval_dir + "/eval.json");
    CHECK(ej.at("gap_fwd").get<double>() == last.gap_fwd);

    // Swapped checkpoints are refused.
    CHECK(run_cmd("eval -c " + cfg + " --forward " + run + "/half_2_B.sbck" +
                  " --backward " + run + "/half_2_F.sbck --out-dir " + eval_dir) == 2);

    // Trajectory sampling from the trained forward model.
    const std::string traj = tmp.sub("traj.csv");
    REQUIRE(run_cmd("sample -c " + cfg + " --checkpoint " + run + "/half_2_F.sbck" +
                    " -n 64 --out " + traj) == 0);
    REQUIRE(fs::exists(traj));
    CHECK(fs::exists(traj + ".meta.json"));
    const TrajectoryBatch tb = read_trajectory_csv(traj);
    CHECK(tb.n_paths == 64);
    CHECK(tb.n_steps == 8);
    CHECK(tb.d == 2);
    CHECK(tb.dir == Direction::Forward);
    CHECK(run_cmd("sample -c " + cfg + " --checkpoint " + run + "/half_2_F.sbck" +
                  " -n 8 --out " + tmp.sub("t2.csv") + " --direction backward") == 2);
    CHECK(run_cmd("sample -c " + cfg + " --checkpoint " + run + "/half_2_F.sbck" +
                  " -n 0 --out " + tmp.sub("t3.csv")) == 2);

    // Figures from the trajectory file and the training curve.
    const std::string plots = tmp.sub("plots");
    REQUIRE(run_cmd("plot --trajectory " + traj + " --run-dir " + run + " --out-dir " +
                    plots) == 0);
    for (const char* name : {"trajectories.svg", "boundaries.svg", "kl_curve.svg"}) {
        const std::string p = (fs::path(plots) / name).string();
        REQUIRE(fs::exists(p));
        std::ifstream f(p);
        std::string head;
        std::getline(f, head);
        CHECK(head.find("<svg") != std::string::npos);
    }

    // Interrupted run + --resume reproduces the uninterrupted artifacts.
    const std::string run_res = tmp.sub("run_resume");
    REQUIRE(run_cmd("train -c " + cfg + " --out-dir " + run_res +
                    " --set train.stop_after_halves=1") == 0);
    REQUIRE(read_metrics_csv(run_res + "/metrics.csv").records.size() == 1);
    REQUIRE(run_cmd("train -c " + cfg + " --out-dir " + run_res + " --resume") == 0);
    const RunMetrics resumed = read_metrics_csv(run_res + "/metrics.csv");
    REQUIRE(resumed.records.size() == 2);
    CHECK(same_record(resumed.records[0], metrics.records[0]));
    CHECK(same_record(resumed.records[1], metrics.records[1]));
    CHECK(file_bytes(run_res + "/half_2_F.sbck") == file_bytes(run + "/half_2_F.sbck"));
    CHECK(file_bytes(run_res + "/half_2_B.sbck") == file_bytes(run + "/half_2_B.sbck"));

    // The thread cap changes scheduling, never results.
    const std::string run_thr = tmp.sub("run_threads");
    REQUIRE(run_cmd("train -c " + cfg + " --out-dir " + run_thr +
                        " --set train.threads=8",
                    "SBLAB_THREADS=3 ") == 0);
    const RunMetrics threaded = read_metrics_csv(run_thr + "/metrics.csv");
    REQUIRE(threaded.records.size() == 2);
    CHECK(same_record(threaded.records[0], metrics.records[0]));
    CHECK(same_record(threaded.records[1], metrics.records[1]));
    CHECK(file_bytes(run_thr + "/half_2_B.sbck") == file_bytes(run + "/half_2_B.sbck"));
}

TEST_CASE("divergent training exits with the numeric failure code") {
    TempDir tmp("sblab_cli_diverge");
    const std::string cfg = tmp.sub("cfg.toml");
    write_file(cfg, base_toml(tmp.sub("run")));
    CHECK(run_cmd("train -c " + cfg + " --set train.lr=1e200") == 3);
}

TEST_CASE("zero-epoch runs persist the initialization and honor override order") {
    TempDir tmp("sblab_cli_zero");
    const std::string cfg = tmp.sub("cfg.toml");
    write_file(cfg, base_toml(tmp.sub("run")));

    const std::string flagdir = tmp.sub("flagdir");
    REQUIRE(run_cmd("train -c " + cfg + " --set train.epochs=0" +
                    " --set train.seed=7 --set train.seed=8" + " --set 'out.dir=\"" +
                    tmp.sub("setdir") + "\"'" + " --out-dir " + flagdir) == 0);
    CHECK_FALSE(fs::exists(tmp.sub("setdir"))); // the dedicated flag wins
    CHECK(fs::exists(flagdir + "/half_0_F.sbck"));
    CHECK(fs::exists(flagdir + "/half_0_B.sbck"));
    CHECK(read_metrics_csv(flagdir + "/metrics.csv").records.empty());

    const json used = read_json(flagdir + "/config_used.json");
    CHECK(used.at("train").at("seed").get<uint64_t>() == 8); // later --set wins
    CHECK(used.at("train").at("epochs").get<int>() == 0);

    const Checkpoint ck = load_checkpoint(flagdir + "/half_0_F.sbck");
    CHECK(ck.tag == kTagBridgeForward);
    CHECK(ck.net.d_in() == 2);

    // An invalid thread cap is rejected before any work happens.
    CHECK(run_cmd("train -c " + cfg + " --set train.epochs=0 --out-dir " + tmp.sub("x"),
                  "SBLAB_THREADS=abc ") == 2);
}
