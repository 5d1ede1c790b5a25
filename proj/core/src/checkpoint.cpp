#include "sblab/checkpoint.hpp"

#include "sblab/errors.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

namespace sblab {

namespace {

constexpr char kMagic[4] = {'S', 'B', 'C', 'K'};
constexpr uint32_t kVersion = 1;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put(std::FILE* f, const void* p, size_t n, const std::string& path) {
    if (std::fwrite(p, 1, n, f) != n) throw IoError("checkpoint: short write to " + path);
}

void get(std::FILE* f, void* p, size_t n, const std::string& path) {
    if (std::fread(p, 1, n, f) != n) throw IoError("checkpoint: truncated file " + path);
}

template <typename T>
void put_one(std::FILE* f, T v, const std::string& path) {
    put(f, &v, sizeof(T), path);
}

template <typename T>
T get_one(std::FILE* f, const std::string& path) {
    T v;
    get(f, &v, sizeof(T), path);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const Mlp& net, const GammaSchedule& sched,
                     uint8_t tag, uint64_t seed) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("checkpoint: cannot open " + path + " for writing");
    std::FILE* fp = f.get();

    put(fp, kMagic, 4, path);
    put_one<uint32_t>(fp, kVersion, path);
    const uint32_t layers = static_cast<uint32_t>(net.n_layers());
    put_one<uint32_t>(fp, layers, path);
    for (uint32_t l = 0; l < layers; ++l) {
        put_one<uint32_t>(fp, static_cast<uint32_t>(net.dims[l + 1]), path); // rows
        put_one<uint32_t>(fp, static_cast<uint32_t>(net.dims[l]), path);     // cols
    }
    put_one<uint8_t>(fp, static_cast<uint8_t>(net.activation), path);
    put_one<uint32_t>(fp, static_cast<uint32_t>(net.embed_dim), path);
    for (uint32_t l = 0; l < layers; ++l) {
        put(fp, net.W[l].data(), net.W[l].size() * sizeof(float), path);
        put(fp, net.b[l].data(), net.b[l].size() * sizeof(float), path);
    }
    const uint32_t N = static_cast<uint32_t>(sched.n_steps());
    put_one<uint32_t>(fp, N, path);
    put(fp, sched.gammas.data(), sched.gammas.size() * sizeof(double), path);
    put_one<uint8_t>(fp, tag, path);
    put_one<uint64_t>(fp, seed, path);
    if (std::fflush(fp) != 0) throw IoError("checkpoint: flush failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("checkpoint: cannot open " + path);
    std::FILE* fp = f.get();

    char magic[4];
    get(fp, magic, 4, path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    const uint32_t version = get_one<uint32_t>(fp, path);
    if (version != kVersion)
        throw IoError("checkpoint: unsupported version " + std::to_string(version) + " in " + path);

    const uint32_t layers = get_one<uint32_t>(fp, path);
    if (layers == 0 || layers > 1024) throw IoError("checkpoint: bad layer count in " + path);

    Checkpoint out;
    std::vector<uint32_t> rows(layers), cols(layers);
    for (uint32_t l = 0; l < layers; ++l) {
        rows[l] = get_one<uint32_t>(fp, path);
        cols[l] = get_one<uint32_t>(fp, path);
        if (rows[l] == 0 || cols[l] == 0 || rows[l] > (1u << 20) || cols[l] > (1u << 20))
            throw IoError("checkpoint: bad layer shape in " + path);
        if (l > 0 && cols[l] != rows[l - 1])
            throw IoError("checkpoint: inconsistent layer shapes in " + path);
    }
    const uint8_t act = get_one<uint8_t>(fp, path);
    if (act != kActSilu && act != kActTanh)
        throw IoError("checkpoint: unknown activation id in " + path);
    const uint32_t embed = get_one<uint32_t>(fp, path);
    if (embed == 0 || embed % 2 != 0 || embed >= cols[0])
        throw IoError("checkpoint: bad embedding width in " + path);

    out.net.activation = act;
    out.net.embed_dim = static_cast<int>(embed);
    out.net.dims.push_back(static_cast<int>(cols[0]));
    for (uint32_t l = 0; l < layers; ++l) out.net.dims.push_back(static_cast<int>(rows[l]));
    for (uint32_t l = 0; l < layers; ++l) {
        std::vector<float> w(static_cast<size_t>(rows[l]) * cols[l]);
        std::vector<float> b(rows[l]);
        get(fp, w.data(), w.size() * sizeof(float), path);
        get(fp, b.data(), b.size() * sizeof(float), path);
        out.net.W.push_back(std::move(w));
        out.net.b.push_back(std::move(b));
    }

    const uint32_t N = get_one<uint32_t>(fp, path);
    if (N == 0 || N > (1u << 20)) throw IoError("checkpoint: bad schedule length in " + path);
    std::vector<double> gammas(N);
    get(fp, gammas.data(), gammas.size() * sizeof(double), path);
    try {
        out.sched = schedule_from_gammas(gammas);
    } catch (const InvalidArgument& e) {
        throw IoError("checkpoint: invalid schedule in " + path + ": " + e.what());
    }
    out.tag = get_one<uint8_t>(fp, path);
    if (out.tag > kTagBridgeBackward)
        throw IoError("checkpoint: unknown role tag in " + path);
    out.seed = get_one<uint64_t>(fp, path);

    char extra;
    if (std::fread(&extra, 1, 1, fp) != 0)
        throw IoError("checkpoint: trailing bytes in " + path);

    out.net.n_steps = static_cast<int>(N);
    return out;
}

void save_sgm(const std::string& path, const PretrainedSgm& sgm, const GammaSchedule& sched,
              uint64_t seed) {
    if (sgm.schedule_hash != schedule_hash(sched))
        throw InvalidArgument("save_sgm: schedule does not match the pretrained net");
    const uint8_t tag =
        (sgm.direction == SgmDirection::DataDirected) ? kTagDataDirected : kTagPriorDirected;
    save_checkpoint(path, sgm.net, sched, tag, seed);
}

PretrainedSgm sgm_from_checkpoint(const Checkpoint& c) {
    if (c.tag != kTagDataDirected && c.tag != kTagPriorDirected)
        throw InvalidArgument("sgm_from_checkpoint: checkpoint does not hold a flow model");
    PretrainedSgm sgm;
    sgm.net = c.net;
    sgm.direction = (c.tag == kTagDataDirected) ? SgmDirection::DataDirected
                                                : SgmDirection::PriorDirected;
    sgm.schedule_hash = schedule_hash(c.sched);
    return sgm;
}

PretrainedSgm load_sgm(const std::string& path, GammaSchedule* sched_out) {
    Checkpoint c = load_checkpoint(path);
    PretrainedSgm sgm = sgm_from_checkpoint(c);
    if (sched_out) *sched_out = c.sched;
    return sgm;
}

} // namespace sblab
