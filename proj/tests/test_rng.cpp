#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sblab/rng.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

using namespace sblab;

TEST_CASE("same seed reproduces the identical stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("reseed restarts the stream") {
    Rng a(7);
    std::vector<uint64_t> first;
    for (int i = 0; i < 16; ++i) first.push_back(a.next_u64());
    a.reseed(7);
    for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == first[static_cast<size_t>(i)]);
}

TEST_CASE("reseed clears the cached Box-Muller draw") {
    Rng a(11);
    (void)a.normal(); // caches its partner
    a.reseed(11);
    Rng b(11);
    for (int i = 0; i < 8; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("uniform lies in [0,1) and uniform_pos in (0,1]") {
    Rng r(3);
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = r.uniform_pos();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("normal draws have unit moments at Monte-Carlo tolerance") {
    Rng r(13);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("below is in range and roughly uniform") {
    Rng r(17);
    const uint64_t n = 7;
    std::vector<int> counts(n, 0);
    for (int i = 0; i < 70000; ++i) {
        const uint64_t v = r.below(n);
        REQUIRE(v < n);
        ++counts[static_cast<size_t>(v)];
    }
    for (const int c : counts) {
        CHECK(c > 9000);
        CHECK(c < 11000);
    }
}

TEST_CASE("derive_seed separates tag lists") {
    const uint64_t root = 1234;
    std::set<uint64_t> seen;
    seen.insert(derive_seed(root, {}));
    seen.insert(derive_seed(root, {0}));
    seen.insert(derive_seed(root, {1}));
    seen.insert(derive_seed(root, {0, 0}));
    seen.insert(derive_seed(root, {0, 1}));
    seen.insert(derive_seed(root, {1, 0}));
    CHECK(seen.size() == 6);
    CHECK(derive_seed(root, {5, 6}) == derive_seed(root, {5, 6}));
    CHECK(derive_seed(root, {5}) != derive_seed(root + 1, {5}));
}

TEST_CASE("derived streams are statistically independent") {
    // Correlation between two sibling streams stays at Monte-Carlo noise.
    Rng a(derive_seed(99, {0}));
    Rng b(derive_seed(99, {1}));
    const int n = 100000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
        const double x = a.normal(), y = b.normal();
        sa += x;
        sb += y;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    const double ma = sa / n, mb = sb / n;
    const double cov = sab / n - ma * mb;
    const double va = saa / n - ma * ma, vb = sbb / n - mb * mb;
    CHECK(std::abs(cov / std::sqrt(va * vb)) < 0.02);
}

TEST_CASE("frozen stream head guards against silent generator changes") {
    // First three outputs of the seed-0 stream, recorded at freeze time.
    Rng r(0);
    CHECK(r.next_u64() == 5987356902031041503ull);
    CHECK(r.next_u64() == 7051070477665621255ull);
    CHECK(r.next_u64() == 6633766593972829180ull);
}

TEST_CASE("frozen normal draws pin the Box-Muller path") {
    Rng r(123);
    CHECK(r.normal() == doctest::Approx(0.4918526188351624).epsilon(1e-15));
    CHECK(r.normal() == doctest::Approx(-0.79527417610713969).epsilon(1e-15));
    CHECK(r.normal() == doctest::Approx(-0.89132887105795344).epsilon(1e-15));
    CHECK(r.normal() == doctest::Approx(-0.13753235498792329).epsilon(1e-15));
}
