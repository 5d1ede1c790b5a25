#pragma once

#include "sblab/datasets.hpp"
#include "sblab/schedule.hpp"
#include "sblab/trainer.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sblab {

// Boundary sampler description as it appears in run configs.
struct SamplerSpec {
    std::string kind = "shifted_gaussian";
    int d = 2;
    uint64_t seed = 1;
    std::vector<double> a;       // shifted_gaussian center; empty -> filled by caller
    std::vector<double> centers; // gaussian_mixture centers, flattened row-major
    double sigma = 1.0;
    int cells = 4;
    double scale = 2.0;
    double noise = 0.05;

    Sampler build() const; // throws InvalidArgument on unsupported combinations
};

// Schedule description: {type, n, gamma_min, gamma_max, normalize}.
struct ScheduleSpec {
    std::string type = "symmetric"; // "constant" | "symmetric"
    int n = 16;
    double gamma_min = 1.0; // constant schedules use gamma_min as the value
    double gamma_max = 10.0;
    bool normalize = true;

    GammaSchedule build() const;
};

// Budget for the pretrain subcommand.
struct PretrainSpec {
    int steps = 4000;
    int batch_size = 128;
    double lr = 1e-4;
    bool dual = true; // also train the prior-directed net
    std::string backward_out = "sgm_backward.sbck";
    std::string forward_out = "sgm_forward.sbck";
};

// Full run description: boundaries, schedule, trainer, eval, artifacts.
struct RunConfig {
    SamplerSpec data;
    SamplerSpec prior;
    ScheduleSpec schedule;
    TrainConfig train; // objective/init/budget/arch/eval knobs live here
    std::string oracle = "auto"; // "auto" | "on" | "off"
    std::string init_backward_path;
    std::string init_forward_path;
    PretrainSpec pretrain;
    std::string out_dir = "run";

    // Boundary samplers with the +a / -a fill convention for empty centers.
    Sampler data_sampler() const;
    Sampler prior_sampler() const;
    // Trainer view: run_dir, config_hash, and oracle_a resolved.
    TrainConfig resolved_train() const;
};

// One parsed "section.key = value" entry.
struct ConfigValue {
    enum class Kind { Str, Bool, Int, Float, NumList, StrList };
    Kind kind = Kind::Str;
    std::string s;
    bool b = false;
    long long i = 0;
    double f = 0.0;
    std::vector<double> nums;
    std::vector<std::string> strs;
};

// Flat "section.key" -> value map shared by the TOML and JSON front ends.
struct ConfigDoc {
    std::map<std::string, ConfigValue> values;
};

ConfigDoc parse_toml_text(const std::string& text);
ConfigDoc parse_json_text(const std::string& text);
// Merge a "section.key=value" assignment (TOML value syntax) into the doc.
void apply_override(ConfigDoc& doc, const std::string& assignment);
// Validate keys and construct the config; fills train.config_hash.
RunConfig build_run_config(const ConfigDoc& doc);
// Reads .toml or .json (content-sniffed when the extension is ambiguous),
// applies overrides in order, then builds.
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides = {});

// Deterministic full serialization used for hashing and artifact stamping.
std::string canonical_config_string(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

} // namespace sblab
