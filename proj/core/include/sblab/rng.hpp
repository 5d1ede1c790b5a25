#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>

namespace sblab {

// splitmix64: used to expand seeds into xoshiro state and to derive
// independent stream seeds from (root, tag...) tuples.
inline uint64_t splitmix64_next(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministically derive a child seed from a root seed and a list of
// integer tags. Used so that every worker / path / half-epoch gets its
// own stream that does not depend on scheduling order.
inline uint64_t derive_seed(uint64_t root, std::initializer_list<uint64_t> tags) {
    uint64_t s = root;
    uint64_t h = splitmix64_next(s);
    for (uint64_t t : tags) {
        s = h ^ (t + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
        h = splitmix64_next(s);
    }
    return h;
}

// xoshiro256++ by Blackman & Vigna. Self-contained so that streams are
// bit-reproducible across platforms and standard library versions
// (std::mt19937 would be fine; std::normal_distribution would not).
class Rng {
public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64_next(sm);
        has_cached_ = false;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1): 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]: never returns zero, safe under log().
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (portable, unlike
    // std::normal_distribution whose algorithm is implementation-defined).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n), n > 0. Unbiased via rejection.
    uint64_t below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace sblab
