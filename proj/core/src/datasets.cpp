#include "sblab/datasets.hpp"

#include "sblab/errors.hpp"

#include <cmath>

namespace sblab {

Sampler shifted_gaussian(std::vector<double> a, uint64_t seed) {
    if (a.empty()) throw InvalidArgument("shifted_gaussian: empty shift vector");
    Sampler s;
    s.kind = SamplerKind::ShiftedGaussian;
    s.d = static_cast<int>(a.size());
    s.a = std::move(a);
    s.seed = seed;
    return s;
}

Sampler gaussian_mixture(std::vector<std::vector<double>> centers, double sigma,
                         uint64_t seed) {
    if (centers.empty()) throw InvalidArgument("gaussian_mixture: no centers");
    const size_t d = centers.front().size();
    if (d == 0) throw InvalidArgument("gaussian_mixture: zero-dimensional centers");
    for (const auto& c : centers)
        if (c.size() != d) throw InvalidArgument("gaussian_mixture: center dims differ");
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian_mixture: sigma must be > 0");
    Sampler s;
    s.kind = SamplerKind::GaussianMixture;
    s.d = static_cast<int>(d);
    s.centers = std::move(centers);
    s.sigma = sigma;
    s.seed = seed;
    return s;
}

Sampler checkerboard(int cells, double scale, uint64_t seed) {
    if (cells < 1) throw InvalidArgument("checkerboard: cells must be >= 1");
    if (!(scale > 0.0)) throw InvalidArgument("checkerboard: scale must be > 0");
    Sampler s;
    s.kind = SamplerKind::Checkerboard;
    s.d = 2;
    s.cells = cells;
    s.scale = scale;
    s.seed = seed;
    return s;
}

Sampler two_moons(double noise, uint64_t seed) {
    if (!(noise >= 0.0)) throw InvalidArgument("two_moons: noise must be >= 0");
    Sampler s;
    s.kind = SamplerKind::TwoMoons;
    s.d = 2;
    s.noise = noise;
    s.seed = seed;
    return s;
}

void draw(const Sampler& s, int n, Rng& rng, double* out) {
    if (n < 1) throw InvalidArgument("draw: n must be >= 1");
    switch (s.kind) {
        case SamplerKind::ShiftedGaussian: {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < s.d; ++j)
                    out[static_cast<size_t>(i) * s.d + j] = s.a[static_cast<size_t>(j)] + rng.normal();
            break;
        }
        case SamplerKind::GaussianMixture: {
            const uint64_t nc = s.centers.size();
            for (int i = 0; i < n; ++i) {
                const auto& c = s.centers[rng.below(nc)];
                for (int j = 0; j < s.d; ++j)
                    out[static_cast<size_t>(i) * s.d + j] = c[static_cast<size_t>(j)] + s.sigma * rng.normal();
            }
            break;
        }
        case SamplerKind::Checkerboard: {
            // Uniform over the "black" cells ((row+col) even) of a
            // cells x cells board covering [-scale, scale]^2.
            std::vector<std::pair<int, int>> black;
            for (int r = 0; r < s.cells; ++r)
                for (int c = 0; c < s.cells; ++c)
                    if ((r + c) % 2 == 0) black.emplace_back(r, c);
            const double w = 2.0 * s.scale / s.cells;
            for (int i = 0; i < n; ++i) {
                const auto [r, c] = black[rng.below(black.size())];
                out[static_cast<size_t>(i) * 2 + 0] = -s.scale + (c + rng.uniform()) * w;
                out[static_cast<size_t>(i) * 2 + 1] = -s.scale + (r + rng.uniform()) * w;
            }
            break;
        }
        case SamplerKind::TwoMoons: {
            const double pi = 3.14159265358979323846;
            for (int i = 0; i < n; ++i) {
                double t = pi * rng.uniform();
                double x, y;
                if (rng.next_u64() & 1ull) {
                    x = std::cos(t);
                    y = std::sin(t);
                } else {
                    x = 1.0 - std::cos(t);
                    y = 0.5 - std::sin(t);
                }
                out[static_cast<size_t>(i) * 2 + 0] = x + s.noise * rng.normal();
                out[static_cast<size_t>(i) * 2 + 1] = y + s.noise * rng.normal();
            }
            break;
        }
    }
}

std::vector<double> draw(const Sampler& s, int n, Rng& rng) {
    std::vector<double> out(static_cast<size_t>(n) * static_cast<size_t>(s.d));
    draw(s, n, rng, out.data());
    return out;
}

const char* sampler_kind_name(SamplerKind k) {
    switch (k) {
        case SamplerKind::ShiftedGaussian: return "shifted_gaussian";
        case SamplerKind::GaussianMixture: return "gaussian_mixture";
        case SamplerKind::Checkerboard: return "checkerboard";
        case SamplerKind::TwoMoons: return "two_moons";
    }
    return "?";
}

SamplerKind sampler_kind_from_name(const std::string& name) {
    if (name == "shifted_gaussian") return SamplerKind::ShiftedGaussian;
    if (name == "gaussian_mixture") return SamplerKind::GaussianMixture;
    if (name == "checkerboard") return SamplerKind::Checkerboard;
    if (name == "two_moons") return SamplerKind::TwoMoons;
    throw InvalidArgument("unknown sampler kind: " + name);
}

} // namespace sblab
