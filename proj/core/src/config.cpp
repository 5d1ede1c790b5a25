#include "sblab/config.hpp"

#include "sblab/errors.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sblab {

namespace {

using Kind = ConfigValue::Kind;

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Cut a trailing comment, honoring double-quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_str) {
            if (c == '\\') ++i;
            else if (c == '"') in_str = false;
        } else if (c == '"') {
            in_str = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string parse_quoted(const std::string& t) {
    if (t.size() < 2 || t.front() != '"')
        throw InvalidArgument("config: expected quoted string: " + t);
    std::string out;
    size_t i = 1;
    for (; i < t.size(); ++i) {
        const char c = t[i];
        if (c == '"') break;
        if (c == '\\') {
            if (i + 1 >= t.size()) throw InvalidArgument("config: dangling escape in " + t);
            const char e = t[++i];
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                default: throw InvalidArgument("config: unsupported escape in " + t);
            }
        } else {
            out.push_back(c);
        }
    }
    if (i >= t.size() || t[i] != '"')
        throw InvalidArgument("config: unterminated string: " + t);
    if (!trim(t.substr(i + 1)).empty())
        throw InvalidArgument("config: trailing characters after string: " + t);
    return out;
}

bool looks_integer(const std::string& t) {
    size_t b = (t[0] == '+' || t[0] == '-') ? 1 : 0;
    if (b == t.size()) return false;
    for (size_t i = b; i < t.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
}

double parse_double_full(const std::string& t) {
    size_t idx = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &idx);
    } catch (const std::exception&) {
        throw InvalidArgument("config: bad number: " + t);
    }
    if (idx != t.size()) throw InvalidArgument("config: bad number: " + t);
    return v;
}

long long parse_int_full(const std::string& t) {
    size_t idx = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &idx);
    } catch (const std::exception&) {
        throw InvalidArgument("config: bad integer: " + t);
    }
    if (idx != t.size()) throw InvalidArgument("config: bad integer: " + t);
    return v;
}

// Split a bracketed array body at top-level commas (no nested arrays).
std::vector<std::string> split_elements(const std::string& body) {
    std::vector<std::string> out;
    std::string cur;
    bool in_str = false;
    for (size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (in_str) {
            cur.push_back(c);
            if (c == '\\' && i + 1 < body.size()) cur.push_back(body[++i]);
            else if (c == '"') in_str = false;
        } else if (c == '"') {
            cur.push_back(c);
            in_str = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    const std::string last = trim(cur);
    if (!last.empty()) out.push_back(last);
    return out;
}

ConfigValue parse_scalar(const std::string& raw) {
    const std::string t = trim(raw);
    if (t.empty()) throw InvalidArgument("config: empty value");
    ConfigValue v;
    if (t.front() == '"') {
        v.kind = Kind::Str;
        v.s = parse_quoted(t);
        return v;
    }
    if (t.front() == '[') {
        if (t.back() != ']') throw InvalidArgument("config: unterminated array: " + t);
        const std::vector<std::string> elems = split_elements(t.substr(1, t.size() - 2));
        if (elems.empty()) {
            v.kind = Kind::NumList;
            return v;
        }
        if (elems.front().front() == '"') {
            v.kind = Kind::StrList;
            for (const auto& e : elems) v.strs.push_back(parse_quoted(e));
        } else {
            v.kind = Kind::NumList;
            for (const auto& e : elems) v.nums.push_back(parse_double_full(e));
        }
        return v;
    }
    if (t == "true" || t == "false") {
        v.kind = Kind::Bool;
        v.b = (t == "true");
        return v;
    }
    if (looks_integer(t)) {
        v.kind = Kind::Int;
        v.i = parse_int_full(t);
        return v;
    }
    v.kind = Kind::Float;
    v.f = parse_double_full(t);
    return v;
}

bool valid_bare_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

const ConfigValue* find(const ConfigDoc& doc, const std::string& key) {
    auto it = doc.values.find(key);
    return it == doc.values.end() ? nullptr : &it->second;
}

long long geti(const ConfigDoc& doc, const std::string& key, long long def) {
    const ConfigValue* v = find(doc, key);
    if (!v) return def;
    if (v->kind != Kind::Int)
        throw InvalidArgument("config key " + key + ": expected an integer");
    return v->i;
}

uint64_t getu64(const ConfigDoc& doc, const std::string& key, uint64_t def) {
    const ConfigValue* v = find(doc, key);
    if (!v) return def;
    if (v->kind != Kind::Int)
        throw InvalidArgument("config key " + key + ": expected an integer");
    return static_cast<uint64_t>(v->i);
}

double getd(const ConfigDoc& doc, const std::string& key, double def) {
    const ConfigValue* v = find(doc, key);
    if (!v) return def;
    if (v->kind == Kind::Int) return static_cast<double>(v->i);
    if (v->kind != Kind::Float)
        throw InvalidArgument("config key " + key + ": expected a number");
    return v->f;
}

bool getb(const ConfigDoc& doc, const std::string& key, bool def) {
    const ConfigValue* v = find(doc, key);
    if (!v) return def;
    if (v->kind != Kind::Bool)
        throw InvalidArgument("config key " + key + ": expected a boolean");
    return v->b;
}

std::string gets(const ConfigDoc& doc, const std::string& key, const std::string& def) {
    const ConfigValue* v = find(doc, key);
    if (!v) return def;
    if (v->kind != Kind::Str)
        throw InvalidArgument("config key " + key + ": expected a string");
    return v->s;
}

std::vector<double> getlist(const ConfigDoc& doc, const std::string& key,
                            const std::vector<double>& def) {
    const ConfigValue* v = find(doc, key);
    if (!v) return def;
    if (v->kind != Kind::NumList)
        throw InvalidArgument("config key " + key + ": expected a number array");
    return v->nums;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k;
        for (const char* sec : {"data", "prior"})
            for (const char* f :
                 {"kind", "d", "seed", "a", "centers", "sigma", "cells", "scale", "noise"})
                k.insert(std::string(sec) + "." + f);
        for (const char* f : {"type", "n", "gamma_min", "gamma_max", "gamma", "normalize"})
            k.insert(std::string("schedule.") + f);
        for (const char* f :
             {"objective", "init", "epochs", "steps_per_half", "batch_size", "lr",
              "cache_paths", "cache_refresh", "hidden", "layers", "embed_dim", "activation",
              "seed", "threads", "early_stop", "plateau_rel", "plateau_window",
              "stop_after_halves", "resume"})
            k.insert(std::string("train.") + f);
        for (const char* f : {"n_paths", "n_eval_times", "seed", "oracle", "oracle_a"})
            k.insert(std::string("eval.") + f);
        for (const char* f : {"backward", "forward"}) k.insert(std::string("init.") + f);
        k.insert("out.dir");
        for (const char* f :
             {"steps", "batch_size", "lr", "dual", "backward_out", "forward_out"})
            k.insert(std::string("pretrain.") + f);
        return k;
    }();
    return keys;
}

void fill_sampler(const ConfigDoc& doc, const std::string& sec, SamplerSpec& spec) {
    spec.kind = gets(doc, sec + ".kind", spec.kind);
    spec.d = static_cast<int>(geti(doc, sec + ".d", spec.d));
    spec.seed = getu64(doc, sec + ".seed", spec.seed);
    spec.a = getlist(doc, sec + ".a", spec.a);
    spec.centers = getlist(doc, sec + ".centers", spec.centers);
    spec.sigma = getd(doc, sec + ".sigma", spec.sigma);
    spec.cells = static_cast<int>(geti(doc, sec + ".cells", spec.cells));
    spec.scale = getd(doc, sec + ".scale", spec.scale);
    spec.noise = getd(doc, sec + ".noise", spec.noise);
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string escape_for_canon(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '\\') out += "\\\\";
        else if (c == '\n') out += "\\n";
        else out.push_back(c);
    }
    return out;
}

void emit(std::string& out, const std::string& key, const std::string& v) {
    out += key;
    out += '=';
    out += escape_for_canon(v);
    out += '\n';
}

std::string num_str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string list_str(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += num_str(v[i]);
    }
    return out;
}

void emit_sampler(std::string& out, const std::string& sec, const SamplerSpec& s) {
    emit(out, sec + ".kind", s.kind);
    emit(out, sec + ".d", std::to_string(s.d));
    emit(out, sec + ".seed", std::to_string(s.seed));
    emit(out, sec + ".a", list_str(s.a));
    emit(out, sec + ".centers", list_str(s.centers));
    emit(out, sec + ".sigma", num_str(s.sigma));
    emit(out, sec + ".cells", std::to_string(s.cells));
    emit(out, sec + ".scale", num_str(s.scale));
    emit(out, sec + ".noise", num_str(s.noise));
}

} // namespace

Sampler SamplerSpec::build() const {
    const SamplerKind k = sampler_kind_from_name(kind);
    switch (k) {
        case SamplerKind::ShiftedGaussian: {
            if (a.empty())
                throw InvalidArgument("sampler spec: shifted_gaussian needs a center");
            if (static_cast<int>(a.size()) != d)
                throw InvalidArgument("sampler spec: center length != d");
            return shifted_gaussian(a, seed);
        }
        case SamplerKind::GaussianMixture: {
            if (d <= 0 || centers.empty() || centers.size() % static_cast<size_t>(d) != 0)
                throw InvalidArgument("sampler spec: mixture centers must be k*d values");
            std::vector<std::vector<double>> cs(centers.size() / static_cast<size_t>(d));
            for (size_t r = 0; r < cs.size(); ++r)
                cs[r].assign(centers.begin() + static_cast<long>(r) * d,
                             centers.begin() + static_cast<long>(r + 1) * d);
            return gaussian_mixture(cs, sigma, seed);
        }
        case SamplerKind::Checkerboard:
            if (d != 2) throw InvalidArgument("sampler spec: checkerboard is 2-D");
            return checkerboard(cells, scale, seed);
        case SamplerKind::TwoMoons:
            if (d != 2) throw InvalidArgument("sampler spec: two_moons is 2-D");
            return two_moons(noise, seed);
    }
    throw InvalidArgument("sampler spec: unsupported kind");
}

GammaSchedule ScheduleSpec::build() const {
    if (type == "constant") return make_constant_schedule(n, gamma_min, normalize);
    if (type == "symmetric") return make_symmetric_schedule(n, gamma_min, gamma_max, normalize);
    throw InvalidArgument("schedule spec: unknown type: " + type);
}

Sampler RunConfig::data_sampler() const {
    SamplerSpec s = data;
    if (s.kind == "shifted_gaussian" && s.a.empty())
        s.a.assign(static_cast<size_t>(s.d), 1.0);
    return s.build();
}

Sampler RunConfig::prior_sampler() const {
    SamplerSpec s = prior;
    if (s.kind == "shifted_gaussian" && s.a.empty())
        s.a.assign(static_cast<size_t>(s.d), -1.0);
    return s.build();
}

namespace {

// The closed-form marginal oracle holds for N(a, I) -> N(-a, I) bridges on a
// normalized schedule.
bool gaussian_oracle_applies(const RunConfig& cfg, std::vector<double>* a_out) {
    if (cfg.data.kind != "shifted_gaussian" || cfg.prior.kind != "shifted_gaussian")
        return false;
    const Sampler ds = cfg.data_sampler();
    const Sampler ps = cfg.prior_sampler();
    if (ds.d != ps.d) return false;
    for (int i = 0; i < ds.d; ++i)
        if (ps.a[static_cast<size_t>(i)] != -ds.a[static_cast<size_t>(i)]) return false;
    if (!cfg.schedule.build().normalized()) return false;
    if (a_out) *a_out = ds.a;
    return true;
}

} // namespace

TrainConfig RunConfig::resolved_train() const {
    TrainConfig tc = train;
    tc.run_dir = out_dir;
    if (oracle == "off") {
        tc.oracle_a.clear();
    } else if (!tc.oracle_a.empty()) {
        if (oracle != "on" && oracle != "auto")
            throw InvalidArgument("config: eval.oracle must be auto/on/off");
    } else {
        std::vector<double> a;
        const bool ok = gaussian_oracle_applies(*this, &a);
        if (oracle == "on" && !ok)
            throw InvalidArgument(
                "config: eval.oracle=on needs mirrored shifted-Gaussian boundaries "
                "and a normalized schedule");
        if (oracle != "on" && oracle != "auto")
            throw InvalidArgument("config: eval.oracle must be auto/on/off");
        if (ok) tc.oracle_a = a;
    }
    tc.config_hash = config_hash_hex(*this);
    return tc;
}

ConfigDoc parse_toml_text(const std::string& text) {
    ConfigDoc doc;
    std::istringstream in(text);
    std::string line, section;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw InvalidArgument("config line " + std::to_string(lineno) +
                                      ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (!valid_bare_key(section))
                throw InvalidArgument("config line " + std::to_string(lineno) +
                                      ": bad section name");
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        if (!valid_bare_key(key))
            throw InvalidArgument("config line " + std::to_string(lineno) + ": bad key");
        if (section.empty())
            throw InvalidArgument("config line " + std::to_string(lineno) +
                                  ": key outside any [section]");
        doc.values[section + "." + key] = parse_scalar(t.substr(eq + 1));
    }
    return doc;
}

ConfigDoc parse_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("config JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("config JSON: top level must be an object");
    ConfigDoc doc;
    for (const auto& [sec, val] : j.items()) {
        if (!val.is_object())
            throw InvalidArgument("config JSON: section '" + sec + "' must be an object");
        for (const auto& [key, v] : val.items()) {
            ConfigValue cv;
            if (v.is_string()) {
                cv.kind = Kind::Str;
                cv.s = v.get<std::string>();
            } else if (v.is_boolean()) {
                cv.kind = Kind::Bool;
                cv.b = v.get<bool>();
            } else if (v.is_number_unsigned()) {
                cv.kind = Kind::Int;
                cv.i = static_cast<long long>(v.get<unsigned long long>());
            } else if (v.is_number_integer()) {
                cv.kind = Kind::Int;
                cv.i = v.get<long long>();
            } else if (v.is_number_float()) {
                cv.kind = Kind::Float;
                cv.f = v.get<double>();
            } else if (v.is_array()) {
                bool all_str = !v.empty();
                for (const auto& e : v) all_str = all_str && e.is_string();
                if (all_str) {
                    cv.kind = Kind::StrList;
                    for (const auto& e : v) cv.strs.push_back(e.get<std::string>());
                } else {
                    cv.kind = Kind::NumList;
                    for (const auto& e : v) {
                        if (!e.is_number())
                            throw InvalidArgument("config JSON: array for " + sec + "." + key +
                                                  " must be all numbers or all strings");
                        cv.nums.push_back(e.get<double>());
                    }
                }
            } else {
                throw InvalidArgument("config JSON: unsupported value type at " + sec + "." +
                                      key);
            }
            doc.values[sec + "." + key] = cv;
        }
    }
    return doc;
}

void apply_override(ConfigDoc& doc, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw InvalidArgument("override must look like section.key=value: " + assignment);
    const std::string key = trim(assignment.substr(0, eq));
    const size_t dot = key.find('.');
    if (dot == std::string::npos || !valid_bare_key(key.substr(0, dot)) ||
        !valid_bare_key(key.substr(dot + 1)))
        throw InvalidArgument("override key must be section.key: " + assignment);
    doc.values[key] = parse_scalar(assignment.substr(eq + 1));
}

RunConfig build_run_config(const ConfigDoc& doc) {
    for (const auto& [key, _] : doc.values)
        if (!known_keys().count(key)) throw InvalidArgument("unknown config key: " + key);

    RunConfig cfg;
    fill_sampler(doc, "data", cfg.data);
    cfg.prior.seed = 2; // distinct boundary streams by default
    fill_sampler(doc, "prior", cfg.prior);

    cfg.schedule.type = gets(doc, "schedule.type", cfg.schedule.type);
    cfg.schedule.n = static_cast<int>(geti(doc, "schedule.n", cfg.schedule.n));
    cfg.schedule.gamma_min = getd(doc, "schedule.gamma_min", cfg.schedule.gamma_min);
    cfg.schedule.gamma_max = getd(doc, "schedule.gamma_max", cfg.schedule.gamma_max);
    if (find(doc, "schedule.gamma")) {
        const double g = getd(doc, "schedule.gamma", 0.0);
        cfg.schedule.gamma_min = g;
        cfg.schedule.gamma_max = g;
    }
    cfg.schedule.normalize = getb(doc, "schedule.normalize", cfg.schedule.normalize);

    TrainConfig& t = cfg.train;
    t.objective = objective_from_name(gets(doc, "train.objective", objective_name(t.objective)));
    t.init = init_mode_from_name(gets(doc, "train.init", init_mode_name(t.init)));
    t.epochs = static_cast<int>(geti(doc, "train.epochs", t.epochs));
    t.steps_per_half = static_cast<int>(geti(doc, "train.steps_per_half", t.steps_per_half));
    t.batch_size = static_cast<int>(geti(doc, "train.batch_size", t.batch_size));
    t.lr = getd(doc, "train.lr", t.lr);
    t.cache_paths = static_cast<int>(geti(doc, "train.cache_paths", t.cache_paths));
    t.cache_refresh = static_cast<int>(geti(doc, "train.cache_refresh", t.cache_refresh));
    t.arch.hidden = static_cast<int>(geti(doc, "train.hidden", t.arch.hidden));
    t.arch.layers = static_cast<int>(geti(doc, "train.layers", t.arch.layers));
    t.arch.embed_dim = static_cast<int>(geti(doc, "train.embed_dim", t.arch.embed_dim));
    {
        const std::string act =
            gets(doc, "train.activation", t.arch.activation == kActTanh ? "tanh" : "silu");
        if (act == "silu") t.arch.activation = kActSilu;
        else if (act == "tanh") t.arch.activation = kActTanh;
        else throw InvalidArgument("config: train.activation must be silu or tanh");
    }
    t.seed = getu64(doc, "train.seed", t.seed);
    t.threads = static_cast<int>(geti(doc, "train.threads", t.threads));
    t.early_stop = getb(doc, "train.early_stop", t.early_stop);
    t.plateau_rel = getd(doc, "train.plateau_rel", t.plateau_rel);
    t.plateau_window = static_cast<int>(geti(doc, "train.plateau_window", t.plateau_window));
    t.stop_after_halves =
        static_cast<int>(geti(doc, "train.stop_after_halves", t.stop_after_halves));
    t.resume = getb(doc, "train.resume", t.resume);

    t.eval_paths = static_cast<int>(geti(doc, "eval.n_paths", t.eval_paths));
    t.eval_times = static_cast<int>(geti(doc, "eval.n_eval_times", t.eval_times));
    t.eval_seed = getu64(doc, "eval.seed", t.eval_seed);
    cfg.oracle = gets(doc, "eval.oracle", cfg.oracle);
    t.oracle_a = getlist(doc, "eval.oracle_a", t.oracle_a);

    cfg.init_backward_path = gets(doc, "init.backward", cfg.init_backward_path);
    cfg.init_forward_path = gets(doc, "init.forward", cfg.init_forward_path);
    cfg.out_dir = gets(doc, "out.dir", cfg.out_dir);

    cfg.pretrain.steps = static_cast<int>(geti(doc, "pretrain.steps", cfg.pretrain.steps));
    cfg.pretrain.batch_size =
        static_cast<int>(geti(doc, "pretrain.batch_size", cfg.pretrain.batch_size));
    cfg.pretrain.lr = getd(doc, "pretrain.lr", cfg.pretrain.lr);
    cfg.pretrain.dual = getb(doc, "pretrain.dual", cfg.pretrain.dual);
    cfg.pretrain.backward_out =
        gets(doc, "pretrain.backward_out", cfg.pretrain.backward_out);
    cfg.pretrain.forward_out = gets(doc, "pretrain.forward_out", cfg.pretrain.forward_out);

    if (cfg.oracle != "auto" && cfg.oracle != "on" && cfg.oracle != "off")
        throw InvalidArgument("config: eval.oracle must be auto/on/off");

    cfg.train.config_hash = config_hash_hex(cfg);
    return cfg;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();

    bool json = false;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        json = true;
    } else if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml") {
        json = false;
    } else {
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            json = (c == '{');
            break;
        }
    }
    ConfigDoc doc = json ? parse_json_text(text) : parse_toml_text(text);
    for (const auto& o : overrides) apply_override(doc, o);
    return build_run_config(doc);
}

std::string canonical_config_string(const RunConfig& cfg) {
    std::string out;
    emit_sampler(out, "data", cfg.data);
    emit_sampler(out, "prior", cfg.prior);
    emit(out, "schedule.type", cfg.schedule.type);
    emit(out, "schedule.n", std::to_string(cfg.schedule.n));
    emit(out, "schedule.gamma_min", num_str(cfg.schedule.gamma_min));
    emit(out, "schedule.gamma_max", num_str(cfg.schedule.gamma_max));
    emit(out, "schedule.normalize", cfg.schedule.normalize ? "true" : "false");
    const TrainConfig& t = cfg.train;
    emit(out, "train.objective", objective_name(t.objective));
    emit(out, "train.init", init_mode_name(t.init));
    emit(out, "train.epochs", std::to_string(t.epochs));
    emit(out, "train.steps_per_half", std::to_string(t.steps_per_half));
    emit(out, "train.batch_size", std::to_string(t.batch_size));
    emit(out, "train.lr", num_str(t.lr));
    emit(out, "train.cache_paths", std::to_string(t.cache_paths));
    emit(out, "train.cache_refresh", std::to_string(t.cache_refresh));
    emit(out, "train.hidden", std::to_string(t.arch.hidden));
    emit(out, "train.layers", std::to_string(t.arch.layers));
    emit(out, "train.embed_dim", std::to_string(t.arch.embed_dim));
    emit(out, "train.activation", t.arch.activation == kActTanh ? "tanh" : "silu");
    emit(out, "train.seed", std::to_string(t.seed));
    emit(out, "train.early_stop", t.early_stop ? "true" : "false");
    emit(out, "train.plateau_rel", num_str(t.plateau_rel));
    emit(out, "train.plateau_window", std::to_string(t.plateau_window));
    emit(out, "eval.n_paths", std::to_string(t.eval_paths));
    emit(out, "eval.n_eval_times", std::to_string(t.eval_times));
    emit(out, "eval.seed", std::to_string(t.eval_seed));
    emit(out, "eval.oracle", cfg.oracle);
    emit(out, "eval.oracle_a", list_str(t.oracle_a));
    emit(out, "init.backward", cfg.init_backward_path);
    emit(out, "init.forward", cfg.init_forward_path);
    emit(out, "pretrain.steps", std::to_string(cfg.pretrain.steps));
    emit(out, "pretrain.batch_size", std::to_string(cfg.pretrain.batch_size));
    emit(out, "pretrain.lr", num_str(cfg.pretrain.lr));
    emit(out, "pretrain.dual", cfg.pretrain.dual ? "true" : "false");
    emit(out, "pretrain.backward_out", cfg.pretrain.backward_out);
    emit(out, "pretrain.forward_out", cfg.pretrain.forward_out);
    return out;
}

std::string config_hash_hex(const RunConfig& cfg) {
    const uint64_t h = fnv1a64(canonical_config_string(cfg));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace sblab
