#pragma once

#include "sblab/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sblab {

enum class SamplerKind { ShiftedGaussian, GaussianMixture, Checkerboard, TwoMoons };

// Seeded i.i.d. sampler for a boundary distribution.
struct Sampler {
    SamplerKind kind = SamplerKind::ShiftedGaussian;
    int d = 0;
    uint64_t seed = 0;
    // shifted_gaussian
    std::vector<double> a;
    // gaussian_mixture
    std::vector<std::vector<double>> centers;
    double sigma = 1.0;
    // checkerboard
    int cells = 4;
    double scale = 2.0;
    // two_moons
    double noise = 0.05;

    // Fresh deterministic stream for a consumer tag.
    Rng stream(uint64_t tag) const { return Rng(derive_seed(seed, {tag})); }
};

Sampler shifted_gaussian(std::vector<double> a, uint64_t seed);
Sampler gaussian_mixture(std::vector<std::vector<double>> centers, double sigma,
                         uint64_t seed);
Sampler checkerboard(int cells, double scale, uint64_t seed);
Sampler two_moons(double noise, uint64_t seed);

// n x d batch into out, i.i.d. draws from the given stream.
void draw(const Sampler& s, int n, Rng& rng, double* out);
std::vector<double> draw(const Sampler& s, int n, Rng& rng);

const char* sampler_kind_name(SamplerKind k);
SamplerKind sampler_kind_from_name(const std::string& name);

} // namespace sblab
