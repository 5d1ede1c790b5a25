#pragma once

#include "sblab/nn.hpp"
#include "sblab/schedule.hpp"
#include "sblab/sgm_init.hpp"

#include <cstdint>
#include <string>

namespace sblab {

// Role byte identifying what a persisted net is.
inline constexpr uint8_t kTagGeneric = 0;
inline constexpr uint8_t kTagDataDirected = 1;  // flow m trained src=data
inline constexpr uint8_t kTagPriorDirected = 2; // flow m trained src=prior
inline constexpr uint8_t kTagBridgeForward = 3;
inline constexpr uint8_t kTagBridgeBackward = 4;

struct Checkpoint {
    Mlp net;
    GammaSchedule sched;
    uint8_t tag = kTagGeneric;
    uint64_t seed = 0;
};

// Binary format (little-endian): magic "SBCK", u32 version (=1), u32 layer
// count, per-layer u32 rows / u32 cols, u8 activation id, u32 embed_dim,
// then per layer the f32 weights (row-major) followed by the f32 biases,
// then u32 N and N f64 gammas, a u8 role tag and a trailing u64 seed.
// Weights round-trip bit-exactly. The loader sets net.n_steps = N.
void save_checkpoint(const std::string& path, const Mlp& net, const GammaSchedule& sched,
                     uint8_t tag, uint64_t seed);
Checkpoint load_checkpoint(const std::string& path);

// Flow-model convenience wrappers over the same format.
void save_sgm(const std::string& path, const PretrainedSgm& sgm, const GammaSchedule& sched,
              uint64_t seed = 0);
PretrainedSgm sgm_from_checkpoint(const Checkpoint& c);
PretrainedSgm load_sgm(const std::string& path, GammaSchedule* sched_out = nullptr);

} // namespace sblab
