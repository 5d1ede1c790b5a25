#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sblab/errors.hpp"
#include "sblab/nn.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace sblab;

namespace {

// Mean squared error over batch and coordinates, f64 end to end, computed
// independently of mse_grad.
double loss_of(const Mlp& net, const std::vector<int>& ks, const std::vector<double>& X,
               int n, const std::vector<double>& T) {
    const int d = net.d_out();
    std::vector<double> Y(static_cast<size_t>(n) * d);
    mlp_forward(net, ks.data(), X.data(), n, Y.data());
    double s = 0.0;
    for (size_t i = 0; i < Y.size(); ++i) {
        const double r = Y[i] - T[i];
        s += r * r;
    }
    return s / (static_cast<double>(n) * d);
}

} // namespace

TEST_CASE("timestep embedding at zero phase") {
    const std::vector<double> e = timestep_embed(0, 20, 4);
    REQUIRE(e.size() == 4);
    CHECK(e[0] == 0.0);
    CHECK(e[1] == 0.0);
    CHECK(e[2] == 1.0);
    CHECK(e[3] == 1.0);
}

TEST_CASE("timestep embedding at k = N with a single frequency") {
    const std::vector<double> e = timestep_embed(20, 20, 2);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == doctest::Approx(0.8414709848078965).epsilon(1e-15));
    CHECK(e[1] == doctest::Approx(0.5403023058681398).epsilon(1e-15));
}

TEST_CASE("timestep embedding is deterministic") {
    const std::vector<double> a = timestep_embed(7, 16, 8);
    const std::vector<double> b = timestep_embed(7, 16, 8);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("all-zero weights map everything to zero") {
    Rng rng(1);
    Mlp net = make_mlp(2, 8, 3, 4, kActSilu, 10, rng);
    for (auto& w : net.W)
        for (auto& v : w) v = 0.0f;
    for (auto& b : net.b)
        for (auto& v : b) v = 0.0f;
    const std::vector<double> x{1.5, -2.5};
    std::vector<double> y(2);
    mlp_forward(net, 3, x.data(), 1, y.data());
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
}

TEST_CASE("single linear layer with identity block reproduces the input") {
    Rng rng(1);
    Mlp net = make_mlp(3, 8, 1, 4, kActSilu, 10, rng); // hidden unused at 1 layer
    REQUIRE(net.n_layers() == 1);
    REQUIRE(net.dims.front() == 7);
    REQUIRE(net.dims.back() == 3);
    for (auto& v : net.W[0]) v = 0.0f;
    for (auto& v : net.b[0]) v = 0.0f;
    for (int i = 0; i < 3; ++i) net.W[0][static_cast<size_t>(i) * 7 + i] = 1.0f;
    const std::vector<double> x{0.25, -1.5, 3.0};
    std::vector<double> y(3);
    mlp_forward(net, 5, x.data(), 1, y.data());
    for (int i = 0; i < 3; ++i) CHECK(y[static_cast<size_t>(i)] == x[static_cast<size_t>(i)]);
}

TEST_CASE("two-layer net matches a hand-computed matrix chain") {
    Rng rng(1);
    Mlp net = make_mlp(1, 2, 2, 2, kActTanh, 8, rng);
    REQUIRE(net.dims == std::vector<int>{3, 2, 1});
    // Exactly f32-representable weights so the hand computation is exact.
    net.W[0] = {0.5f, -0.25f, 0.125f, -0.5f, 0.75f, 0.0625f};
    net.b[0] = {0.125f, -0.25f};
    net.W[1] = {0.3125f, -0.4375f};
    net.b[1] = {0.0625f};

    const int k = 3;
    const double x = 0.75;
    std::vector<double> y(1);
    mlp_forward(net, k, &x, 1, y.data());

    const std::vector<double> e = timestep_embed(k, 8, 2);
    const double in[3] = {x, e[0], e[1]};
    double z0 = 0.125, z1 = -0.25;
    z0 += 0.5 * in[0] - 0.25 * in[1] + 0.125 * in[2];
    z1 += -0.5 * in[0] + 0.75 * in[1] + 0.0625 * in[2];
    const double want = 0.0625 + 0.3125 * std::tanh(z0) - 0.4375 * std::tanh(z1);
    CHECK(y[0] == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("forward is deterministic and batch rows are independent") {
    Rng rng(9);
    const Mlp net = make_mlp(2, 16, 3, 8, kActSilu, 12, rng);
    const std::vector<double> X{0.1, -0.2, 1.0, 2.0};
    const std::vector<int> ks{4, 7};
    std::vector<double> Y(4), Y2(4), row(2);
    mlp_forward(net, ks.data(), X.data(), 2, Y.data());
    mlp_forward(net, ks.data(), X.data(), 2, Y2.data());
    for (int i = 0; i < 4; ++i) CHECK(Y[static_cast<size_t>(i)] == Y2[static_cast<size_t>(i)]);
    mlp_forward(net, 7, X.data() + 2, 1, row.data());
    CHECK(row[0] == Y[2]);
    CHECK(row[1] == Y[3]);
}

TEST_CASE("zero residual gives zero loss and zero gradients") {
    Rng rng(5);
    const Mlp net = make_mlp(2, 8, 3, 4, kActSilu, 6, rng);
    const int n = 5;
    std::vector<double> X(static_cast<size_t>(n) * 2);
    std::vector<int> ks(static_cast<size_t>(n));
    Rng data(77);
    for (auto& v : X) v = data.normal();
    for (int i = 0; i < n; ++i) ks[static_cast<size_t>(i)] = i;
    std::vector<double> T(static_cast<size_t>(n) * 2);
    mlp_forward(net, ks.data(), X.data(), n, T.data());

    MlpGrads grads = make_grads(net);
    MlpWorkspace ws;
    const double loss = mse_grad(net, ks.data(), X.data(), n, T.data(), grads, &ws);
    CHECK(loss == 0.0);
    for (const auto& g : grads.gW)
        for (const double v : g) CHECK(v == 0.0);
    for (const auto& g : grads.gb)
        for (const double v : g) CHECK(v == 0.0);
}

TEST_CASE("scaling residuals scales the loss quadratically") {
    Rng rng(6);
    const Mlp net = make_mlp(1, 8, 2, 4, kActSilu, 6, rng);
    const int n = 8;
    std::vector<double> X(static_cast<size_t>(n)), Y(static_cast<size_t>(n));
    std::vector<int> ks(static_cast<size_t>(n), 2);
    Rng data(78);
    for (auto& v : X) v = data.normal();
    mlp_forward(net, ks.data(), X.data(), n, Y.data());
    const double c = 3.0;
    std::vector<double> T1(static_cast<size_t>(n)), Tc(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double r = 0.37 * (i + 1);
        T1[static_cast<size_t>(i)] = Y[static_cast<size_t>(i)] - r;
        Tc[static_cast<size_t>(i)] = Y[static_cast<size_t>(i)] - c * r;
    }
    MlpGrads g = make_grads(net);
    MlpWorkspace ws;
    const double l1 = mse_grad(net, ks.data(), X.data(), n, T1.data(), g, &ws);
    g.zero();
    const double lc = mse_grad(net, ks.data(), X.data(), n, Tc.data(), g, &ws);
    CHECK(lc == doctest::Approx(c * c * l1).epsilon(1e-12));
}

TEST_CASE("non-finite data is a numeric error") {
    Rng rng(4);
    const Mlp net = make_mlp(1, 4, 2, 2, kActSilu, 4, rng);
    std::vector<double> X{std::numeric_limits<double>::quiet_NaN()};
    std::vector<double> T{0.0};
    std::vector<int> ks{1};
    MlpGrads g = make_grads(net);
    MlpWorkspace ws;
    CHECK_THROWS_AS(mse_grad(net, ks.data(), X.data(), 1, T.data(), g, &ws), NumericError);
}

TEST_CASE("reverse-mode gradients match central finite differences") {
    Rng rng(2024);
    Mlp net = make_mlp(2, 8, 3, 4, kActSilu, 10, rng);
    const int n = 6;
    std::vector<double> X(static_cast<size_t>(n) * 2), T(static_cast<size_t>(n) * 2);
    std::vector<int> ks(static_cast<size_t>(n));
    Rng data(4096);
    for (auto& v : X) v = data.normal();
    for (auto& v : T) v = data.normal();
    for (int i = 0; i < n; ++i)
        ks[static_cast<size_t>(i)] = static_cast<int>(data.below(11));

    MlpGrads grads = make_grads(net);
    MlpWorkspace ws;
    mse_grad(net, ks.data(), X.data(), n, T.data(), grads, &ws);

    const double h = 1e-3;
    Rng probe(31337);
    int checked = 0;
    double max_rel = 0.0;
    while (checked < 300) {
        const int l = static_cast<int>(probe.below(static_cast<uint64_t>(net.n_layers())));
        const bool bias = probe.below(4) == 0;
        auto& vecf = bias ? net.b[static_cast<size_t>(l)] : net.W[static_cast<size_t>(l)];
        const int idx = static_cast<int>(probe.below(vecf.size()));
        const float orig = vecf[static_cast<size_t>(idx)];

        // Realized f32 perturbations: the finite-difference denominator is
        // the exact f64 gap between the two weights actually evaluated.
        const float wp = static_cast<float>(static_cast<double>(orig) + h);
        const float wm = static_cast<float>(static_cast<double>(orig) - h);
        vecf[static_cast<size_t>(idx)] = wp;
        const double lp = loss_of(net, ks, X, n, T);
        vecf[static_cast<size_t>(idx)] = wm;
        const double lm = loss_of(net, ks, X, n, T);
        vecf[static_cast<size_t>(idx)] = orig;
        const double fd = (lp - lm) / (static_cast<double>(wp) - static_cast<double>(wm));

        const auto& gvec = bias ? grads.gb[static_cast<size_t>(l)] : grads.gW[static_cast<size_t>(l)];
        const double ad = gvec[static_cast<size_t>(idx)];
        const double denom = std::max({std::abs(ad), std::abs(fd), 1e-3});
        max_rel = std::max(max_rel, std::abs(ad - fd) / denom);
        ++checked;
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("adam with zero gradient leaves weights unchanged") {
    Rng rng(8);
    Mlp net = make_mlp(1, 4, 2, 2, kActSilu, 4, rng);
    const Mlp before = net;
    MlpGrads g = make_grads(net);
    AdamState st = make_adam_state(net);
    adam_step(net, g, st, 1e-4);
    for (size_t l = 0; l < net.W.size(); ++l) {
        for (size_t i = 0; i < net.W[l].size(); ++i) CHECK(net.W[l][i] == before.W[l][i]);
        for (size_t i = 0; i < net.b[l].size(); ++i) CHECK(net.b[l][i] == before.b[l][i]);
    }
}

TEST_CASE("first adam step has the bias-corrected magnitude") {
    Rng rng(8);
    Mlp net = make_mlp(1, 4, 1, 2, kActSilu, 4, rng);
    const float w0 = net.W[0][0];
    MlpGrads g = make_grads(net);
    g.gW[0][0] = 1.0;
    AdamState st = make_adam_state(net);
    adam_step(net, g, st, 1e-4);
    // m-hat = v-hat = 1 after bias correction, so the step is lr/(1 + eps).
    const double want = 1e-4 / (1.0 + 1e-8);
    CHECK(static_cast<double>(w0) - static_cast<double>(net.W[0][0]) ==
          doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("repeated identical gradients give non-increasing step sizes") {
    Rng rng(8);
    Mlp net = make_mlp(1, 4, 1, 2, kActSilu, 4, rng);
    MlpGrads g = make_grads(net);
    g.gW[0][0] = 0.7;
    AdamState st = make_adam_state(net);
    double prev_step = std::numeric_limits<double>::infinity();
    double w_before = net.W[0][0];
    for (int i = 0; i < 6; ++i) {
        adam_step(net, g, st, 1e-4);
        const double step = std::abs(static_cast<double>(net.W[0][0]) - w_before);
        w_before = net.W[0][0];
        CHECK(step <= prev_step * (1.0 + 1e-12));
        prev_step = step;
    }
}

TEST_CASE("non-finite gradient is rejected and weights stay untouched") {
    Rng rng(8);
    Mlp net = make_mlp(1, 4, 1, 2, kActSilu, 4, rng);
    const Mlp before = net;
    MlpGrads g = make_grads(net);
    g.gW[0][0] = std::numeric_limits<double>::quiet_NaN();
    AdamState st = make_adam_state(net);
    CHECK_THROWS_AS(adam_step(net, g, st, 1e-4), NumericError);
    for (size_t i = 0; i < net.W[0].size(); ++i) CHECK(net.W[0][i] == before.W[0][i]);
}

TEST_CASE("ema blends toward the live weights without touching them") {
    Rng rng(12);
    Mlp net = make_mlp(1, 4, 1, 2, kActSilu, 4, rng);
    EmaState ema = make_ema(net, 0.5);
    const float w0 = net.W[0][0];
    net.W[0][0] = w0 + 1.0f;
    ema_update(ema, net);
    // shadow = 0.5 * w0 + 0.5 * (w0 + 1)
    const double want = static_cast<double>(w0) + 0.5;
    const Mlp shadowed = with_ema_weights(net, ema);
    CHECK(std::abs(static_cast<double>(shadowed.W[0][0]) - want) < 1e-6);
    CHECK(net.W[0][0] == w0 + 1.0f);
}

TEST_CASE("make_mlp validates its arguments") {
    Rng rng(1);
    CHECK_THROWS_AS(make_mlp(0, 4, 2, 2, kActSilu, 4, rng), InvalidArgument);
    CHECK_THROWS_AS(make_mlp(2, 4, 0, 2, kActSilu, 4, rng), InvalidArgument);
    CHECK_THROWS_AS(make_mlp(2, 4, 2, 3, kActSilu, 4, rng), InvalidArgument); // odd embed
    CHECK_THROWS_AS(make_mlp(2, 4, 2, 2, 99, 4, rng), InvalidArgument);
}

TEST_CASE("arch overload matches the explicit-argument overload") {
    MlpArch arch;
    arch.hidden = 24;
    arch.layers = 3;
    arch.embed_dim = 6;
    arch.activation = kActTanh;
    Rng r1(555), r2(555);
    const Mlp a = make_mlp(2, arch, 9, r1);
    const Mlp b = make_mlp(2, 24, 3, 6, kActTanh, 9, r2);
    REQUIRE(a.dims == b.dims);
    CHECK(a.activation == b.activation);
    CHECK(a.embed_dim == b.embed_dim);
    CHECK(a.n_steps == b.n_steps);
    for (size_t l = 0; l < a.W.size(); ++l) {
        for (size_t i = 0; i < a.W[l].size(); ++i) CHECK(a.W[l][i] == b.W[l][i]);
        for (size_t i = 0; i < a.b[l].size(); ++i) CHECK(a.b[l][i] == b.b[l][i]);
    }
}
