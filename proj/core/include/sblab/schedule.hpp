#pragma once

#include <cstdint>
#include <vector>

namespace sblab {

// Discrete noise schedule gamma_1..gamma_N with prefix sums
// gamma_bar_0 = 0, gamma_bar_k = sum_{i<=k} gamma_i. Both arrays are kept
// in a canonical form where gamma_bars is bitwise the running sum of gammas
// AND gammas is bitwise the difference of adjacent gamma_bars, so that
// serializing the gammas alone reproduces the exact same schedule.
struct GammaSchedule {
    std::vector<double> gammas;     // size N, gammas[k-1] = gamma_k
    std::vector<double> gamma_bars; // size N+1, gamma_bars[0] = 0

    int n_steps() const { return static_cast<int>(gammas.size()); }
    // gamma_k, 1-based as in the transition formulas.
    double gamma(int k) const { return gammas[static_cast<size_t>(k) - 1]; }
    bool normalized() const { return gamma_bars.back() == 1.0; }
};

// All entries equal; with normalize the entries become 1/N exactly
// (up to the canonical rounding of the running sum).
GammaSchedule make_constant_schedule(int n, double gamma, bool normalize);

// Piecewise-linear triangular profile: starts at gamma_min, peaks at
// gamma_max in the middle, decays back; symmetric under k -> N+1-k.
GammaSchedule make_symmetric_schedule(int n, double gamma_min, double gamma_max,
                                      bool normalize);

// gamma_bars[k]; throws on k outside [0, N].
double gamma_bar(const GammaSchedule& s, int k);

// Rescale so gamma_bar_N == 1.0 (bitwise). Idempotent.
GammaSchedule normalized(const GammaSchedule& s);

// Rebuild a schedule from raw per-step values (e.g. loaded from a
// checkpoint). Values already in canonical form pass through unchanged.
GammaSchedule schedule_from_gammas(const std::vector<double>& gammas);

// FNV-1a over N and the exact bit patterns of the gammas; used to pair
// pre-trained nets with the schedule they were trained against.
uint64_t schedule_hash(const GammaSchedule& s);

} // namespace sblab
