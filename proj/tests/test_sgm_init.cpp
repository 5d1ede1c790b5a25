#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sblab/errors.hpp"
#include "sblab/sgm_init.hpp"

#include <cmath>
#include <vector>

using namespace sblab;

namespace {

PretrainBudget tiny_budget(int steps) {
    PretrainBudget b;
    b.steps = steps;
    b.batch_size = 64;
    b.lr = 1e-3;
    b.arch.hidden = 32;
    b.arch.layers = 3;
    b.arch.embed_dim = 8;
    return b;
}

// A pretrained stub whose net outputs the same constant everywhere: zero
// weights, final bias = value. Wrapped maps become exact affine shifts.
PretrainedSgm constant_sgm(int d, int n_steps, double value, SgmDirection dir,
                           const GammaSchedule& sched) {
    Rng rng(1);
    PretrainedSgm sgm;
    sgm.net = make_mlp(d, 8, 2, 4, kActSilu, n_steps, rng);
    for (auto& w : sgm.net.W)
        for (auto& v : w) v = 0.0f;
    for (auto& b : sgm.net.b)
        for (auto& v : b) v = 0.0f;
    for (auto& v : sgm.net.b.back()) v = static_cast<float>(value);
    sgm.direction = dir;
    sgm.schedule_hash = schedule_hash(sched);
    return sgm;
}

} // namespace

TEST_CASE("point-mass endpoints make the flow target exact and learnable") {
    // src a point at +2, dst a point at -2 (d = 1): the regression target is
    // the constant x_src - x_dst = 4 at every (k, x). A few hundred steps of
    // training pull the prediction to within a few percent.
    const GammaSchedule sched = make_constant_schedule(8, 0.125, true);
    const Sampler src = gaussian_mixture({{2.0}}, 1e-4, 3);
    const Sampler dst = gaussian_mixture({{-2.0}}, 1e-4, 4);
    Rng rng(derive_seed(99, {20}));
    double final_loss = -1.0;
    PretrainBudget budget = tiny_budget(1500);
    budget.lr = 3e-3;
    const PretrainedSgm sgm = pretrain_flow_sgm(src, dst, sched, budget, rng,
                                                SgmDirection::DataDirected, &final_loss);
    CHECK(final_loss >= 0.0);
    CHECK(final_loss < 0.05);
    CHECK(sgm.direction == SgmDirection::DataDirected);
    CHECK(sgm.schedule_hash == schedule_hash(sched));

    // probe the net on interpolant states across all timesteps
    for (int k = 0; k <= 8; ++k) {
        const double t = gamma_bar(sched, k);
        const double x = (1.0 - t) * 2.0 + t * (-2.0);
        double y = 0.0;
        mlp_forward(sgm.net, k, &x, 1, &y);
        CHECK(std::abs(y - 4.0) < 0.25);
    }
}

TEST_CASE("zero budget returns the fresh net") {
    const GammaSchedule sched = make_constant_schedule(4, 0.25, true);
    const Sampler src = shifted_gaussian({1.0}, 1);
    const Sampler dst = shifted_gaussian({-1.0}, 2);
    Rng r1(derive_seed(7, {20}));
    double final_loss = -1.0;
    const PretrainedSgm sgm =
        pretrain_flow_sgm(src, dst, sched, tiny_budget(0), r1, SgmDirection::PriorDirected,
                          &final_loss);
    CHECK(final_loss == 0.0);
    // identical to building the same net off the same stream directly
    Rng r2(derive_seed(7, {20}));
    MlpArch arch = tiny_budget(0).arch;
    const Mlp fresh = make_mlp(1, arch, 4, r2);
    REQUIRE(sgm.net.dims == fresh.dims);
    for (size_t l = 0; l < fresh.W.size(); ++l)
        for (size_t i = 0; i < fresh.W[l].size(); ++i)
            CHECK(sgm.net.W[l][i] == fresh.W[l][i]);
}

TEST_CASE("pretraining is deterministic in the seed") {
    const GammaSchedule sched = make_constant_schedule(4, 0.25, true);
    const Sampler src = shifted_gaussian({1.0, 0.0}, 5);
    const Sampler dst = shifted_gaussian({-1.0, 0.0}, 6);
    Rng r1(123), r2(123), r3(321);
    const PretrainedSgm a = pretrain_flow_sgm(src, dst, sched, tiny_budget(50), r1);
    const PretrainedSgm b = pretrain_flow_sgm(src, dst, sched, tiny_budget(50), r2);
    const PretrainedSgm c = pretrain_flow_sgm(src, dst, sched, tiny_budget(50), r3);
    bool all_equal = true, any_diff = false;
    for (size_t l = 0; l < a.net.W.size(); ++l)
        for (size_t i = 0; i < a.net.W[l].size(); ++i) {
            if (a.net.W[l][i] != b.net.W[l][i]) all_equal = false;
            if (a.net.W[l][i] != c.net.W[l][i]) any_diff = true;
        }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("budget validation") {
    const GammaSchedule sched = make_constant_schedule(4, 0.25, true);
    // Total mass 2, so it cannot pass as normalized by accident.
    const GammaSchedule raw = make_constant_schedule(4, 0.5, false);
    const Sampler src = shifted_gaussian({1.0}, 1);
    const Sampler dst = shifted_gaussian({-1.0}, 2);
    Rng rng(1);
    PretrainBudget bad = tiny_budget(10);
    bad.steps = -1;
    CHECK_THROWS_AS(pretrain_flow_sgm(src, dst, sched, bad, rng), InvalidArgument);
    bad = tiny_budget(10);
    bad.batch_size = 0;
    CHECK_THROWS_AS(pretrain_flow_sgm(src, dst, sched, bad, rng), InvalidArgument);
    bad = tiny_budget(10);
    bad.lr = 0.0;
    CHECK_THROWS_AS(pretrain_flow_sgm(src, dst, sched, bad, rng), InvalidArgument);
    CHECK_THROWS_AS(pretrain_flow_sgm(src, dst, raw, tiny_budget(10), rng), InvalidArgument);
    const Sampler dst2 = shifted_gaussian({-1.0, 0.0}, 2);
    CHECK_THROWS_AS(pretrain_flow_sgm(src, dst2, sched, tiny_budget(10), rng),
                    InvalidArgument);
}

TEST_CASE("backward wrapper applies x + gamma_k * m(k, x)") {
    const GammaSchedule sched = make_symmetric_schedule(6, 1.0, 3.0, true);
    const PretrainedSgm sgm = constant_sgm(2, 6, 4.0, SgmDirection::DataDirected, sched);
    const MeanFn f = wrap_backward_init(sgm, sched);
    REQUIRE(f.d == 2);
    const std::vector<double> x{0.5, -1.5};
    std::vector<double> out(2);
    for (int k = 1; k <= 6; ++k) {
        f.eval_const(k, x.data(), 1, out.data());
        const double g = sched.gamma(k);
        CHECK(out[0] == doctest::Approx(0.5 + g * 4.0).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(-1.5 + g * 4.0).epsilon(1e-12));
    }
}

TEST_CASE("forward wrapper reverses the pretrained time axis") {
    const GammaSchedule sched = make_symmetric_schedule(6, 1.0, 3.0, true);
    // Net computes value + 0 * x but we need k-dependence to see the
    // reversal: use weights that add a multiple of the first embed feature.
    Rng rng(2);
    PretrainedSgm sgm;
    sgm.net = make_mlp(1, 4, 1, 4, kActSilu, 6, rng); // single linear layer
    for (auto& v : sgm.net.W[0]) v = 0.0f;
    for (auto& v : sgm.net.b[0]) v = 0.0f;
    sgm.net.W[0][1] = 1.0f; // reads embed feature 0 = sin(k/N)
    sgm.direction = SgmDirection::PriorDirected;
    sgm.schedule_hash = schedule_hash(sched);

    const MeanFn f = wrap_forward_init(sgm, sched);
    const double x = 0.25;
    double out = 0.0;
    for (int k = 0; k < 6; ++k) {
        f.eval_const(k, &x, 1, &out);
        const double e0 = timestep_embed(6 - k, 6, 4)[0];
        const double want = x + sched.gamma(k + 1) * e0;
        CHECK(out == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("misaligned control shares the backward map shape") {
    const GammaSchedule sched = make_constant_schedule(5, 0.2, true);
    const PretrainedSgm sgm = constant_sgm(1, 5, -2.0, SgmDirection::DataDirected, sched);
    const MeanFn a = wrap_backward_init(sgm, sched);
    const MeanFn b = misaligned_init_control(sgm, sched);
    const double x = 1.0;
    double ya = 0.0, yb = 0.0;
    for (int k = 1; k <= 5; ++k) {
        a.eval_const(k, &x, 1, &ya);
        b.eval_const(k, &x, 1, &yb);
        CHECK(ya == yb);
    }
}

TEST_CASE("wrappers reject the wrong flow direction") {
    const GammaSchedule sched = make_constant_schedule(4, 0.25, true);
    const PretrainedSgm data_dir = constant_sgm(1, 4, 1.0, SgmDirection::DataDirected, sched);
    const PretrainedSgm prior_dir = constant_sgm(1, 4, 1.0, SgmDirection::PriorDirected, sched);
    CHECK_THROWS_AS(wrap_backward_init(prior_dir, sched), InvalidArgument);
    CHECK_THROWS_AS(wrap_forward_init(data_dir, sched), InvalidArgument);
    // Schedule mismatch: same N but a ramp, so the normalized gammas differ
    // (a scaled constant schedule would normalize back to the original).
    const GammaSchedule other = make_symmetric_schedule(4, 1.0, 3.0, true);
    CHECK_THROWS_AS(wrap_backward_init(data_dir, other), InvalidArgument);
}

TEST_CASE("interpolant training pins the chain endpoints") {
    // With a data-directed flow trained between two point masses, the wrapped
    // backward map walks the deterministic interpolant: starting at the dst
    // point, applying the map at k = N..1 lands on the src point.
    const GammaSchedule sched = make_constant_schedule(8, 0.125, true);
    // exact constant net: m(k, x) = src - dst = 4
    const PretrainedSgm sgm = constant_sgm(1, 8, 4.0, SgmDirection::DataDirected, sched);
    const MeanFn f = wrap_backward_init(sgm, sched);
    double x = -2.0; // dst point
    for (int k = 8; k >= 1; --k) {
        double next = 0.0;
        f.eval_const(k, &x, 1, &next);
        x = next;
    }
    CHECK(x == doctest::Approx(2.0).epsilon(1e-9)); // src point
}
