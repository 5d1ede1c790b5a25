#include "sblab/schedule.hpp"

#include "sblab/errors.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace sblab {

namespace {

// Bring (gammas, gamma_bars) to the canonical fixpoint where
// gamma_bars == cumsum(gammas) and gammas == diff(gamma_bars) hold bitwise.
// Mathematically the adjustments are sub-ulp; a handful of rounds always
// suffices for positive, sanely-scaled schedules.
GammaSchedule canonicalize(std::vector<double> g, bool normalize) {
    const size_t n = g.size();
    if (n == 0) throw InvalidArgument("schedule: need at least one step");
    for (double v : g)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidArgument("schedule: every gamma must be positive and finite");

    if (normalize) {
        double total = 0.0;
        for (double v : g) total += v;
        for (double& v : g) v /= total;
    }

    std::vector<double> bars(n + 1, 0.0);
    for (int round = 0; round < 16; ++round) {
        bars[0] = 0.0;
        for (size_t k = 0; k < n; ++k) bars[k + 1] = bars[k] + g[k];
        if (normalize) {
            // Exact last step: both operands representable, and the
            // subtraction is exact whenever bars[n-1] >= 0.5 (always true
            // for N >= 2 here); the running sum then lands on 1.0 bitwise.
            g[n - 1] = 1.0 - bars[n - 1];
            bars[n] = bars[n - 1] + g[n - 1];
        }
        bool stable = true;
        for (size_t k = 0; k < n; ++k) {
            double diff = bars[k + 1] - bars[k];
            if (diff != g[k]) {
                g[k] = diff;
                stable = false;
            }
        }
        if (stable) {
            GammaSchedule s;
            s.gammas = std::move(g);
            s.gamma_bars = std::move(bars);
            if (normalize && s.gamma_bars.back() != 1.0)
                throw NumericError("schedule: normalization did not reach 1.0");
            for (size_t k = 0; k < n; ++k)
                if (!(s.gammas[k] > 0.0))
                    throw NumericError("schedule: canonical form lost positivity");
            return s;
        }
    }
    throw NumericError("schedule: canonical form did not converge");
}

} // namespace

GammaSchedule make_constant_schedule(int n, double gamma, bool normalize) {
    if (n < 1) throw InvalidArgument("make_constant_schedule: N must be >= 1");
    if (!(gamma > 0.0)) throw InvalidArgument("make_constant_schedule: gamma must be > 0");
    return canonicalize(std::vector<double>(static_cast<size_t>(n), gamma), normalize);
}

GammaSchedule make_symmetric_schedule(int n, double gamma_min, double gamma_max,
                                      bool normalize) {
    if (n < 2) throw InvalidArgument("make_symmetric_schedule: N must be >= 2");
    if (!(gamma_min > 0.0)) throw InvalidArgument("make_symmetric_schedule: gamma_min must be > 0");
    if (gamma_min > gamma_max)
        throw InvalidArgument("make_symmetric_schedule: gamma_min > gamma_max");

    std::vector<double> g(static_cast<size_t>(n));
    const int m = n / 2;
    if (n % 2 == 0) {
        // Ramp over k = 1..m, mirrored; the middle pair sits at gamma_max.
        for (int k = 1; k <= m; ++k) {
            double f = (m == 1) ? 1.0 : double(k - 1) / double(m - 1);
            g[k - 1] = gamma_min + (gamma_max - gamma_min) * f;
        }
        for (int k = m + 1; k <= n; ++k) g[k - 1] = g[static_cast<size_t>(n - k)];
    } else {
        // Ramp over k = 1..m+1 peaking exactly at the middle entry.
        for (int k = 1; k <= m + 1; ++k) {
            double f = double(k - 1) / double(m);
            g[k - 1] = gamma_min + (gamma_max - gamma_min) * f;
        }
        for (int k = m + 2; k <= n; ++k) g[k - 1] = g[static_cast<size_t>(n - k)];
    }
    return canonicalize(std::move(g), normalize);
}

double gamma_bar(const GammaSchedule& s, int k) {
    if (k < 0 || k > s.n_steps())
        throw InvalidArgument("gamma_bar: k out of range [0, N], got " + std::to_string(k));
    return s.gamma_bars[static_cast<size_t>(k)];
}

GammaSchedule normalized(const GammaSchedule& s) {
    return canonicalize(s.gammas, true);
}

GammaSchedule schedule_from_gammas(const std::vector<double>& gammas) {
    // A canonical schedule re-enters through the same fixpoint unchanged;
    // normalized-ness is recovered as gamma_bars.back() == 1.0.
    return canonicalize(gammas, false);
}

uint64_t schedule_hash(const GammaSchedule& s) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, size_t len) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    uint64_t n = static_cast<uint64_t>(s.n_steps());
    mix(&n, sizeof n);
    for (double v : s.gammas) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        mix(&bits, sizeof bits);
    }
    return h;
}

} // namespace sblab
