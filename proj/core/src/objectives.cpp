#include "sblab/objectives.hpp"

#include "sblab/errors.hpp"

#include <string>

namespace sblab {

const char* direction_name(Direction d) {
    return d == Direction::Forward ? "forward" : "backward";
}

const char* objective_name(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::DsbOriginal: return "dsb";
        case ObjectiveKind::Ipmm: return "ipmm";
        case ObjectiveKind::Iptm: return "iptm";
        case ObjectiveKind::Ipfm: return "ipfm";
    }
    return "?";
}

ObjectiveKind objective_from_name(const std::string& name) {
    if (name == "dsb") return ObjectiveKind::DsbOriginal;
    if (name == "ipmm") return ObjectiveKind::Ipmm;
    if (name == "iptm") return ObjectiveKind::Iptm;
    if (name == "ipfm") return ObjectiveKind::Ipfm;
    throw InvalidArgument("unknown objective: " + name);
}

namespace {

void check_k(int k, const GammaSchedule& s, const char* who) {
    if (k < 0 || k >= s.n_steps())
        throw InvalidArgument(std::string(who) + ": transition index k out of [0, N-1], got " +
                              std::to_string(k));
}

const double* state_row(const std::vector<double>& states, int k, int d) {
    return states.data() + static_cast<size_t>(k) * static_cast<size_t>(d);
}

} // namespace

PosteriorParams posterior_params(Direction dir, int k,
                                 const std::vector<double>& pinned_state,
                                 const std::vector<double>& current_state,
                                 const GammaSchedule& sched) {
    check_k(k, sched, "posterior_params");
    if (pinned_state.size() != current_state.size())
        throw InvalidArgument("posterior_params: pinned/current dims differ");
    const size_t d = current_state.size();
    PosteriorParams p;
    p.mean.resize(d);
    if (dir == Direction::Backward) {
        const double g = sched.gamma(k + 1);
        const double gb1 = sched.gamma_bars[static_cast<size_t>(k) + 1];
        const double gb0 = sched.gamma_bars[static_cast<size_t>(k)];
        const double r = g / gb1;
        for (size_t j = 0; j < d; ++j)
            p.mean[j] = current_state[j] + r * (pinned_state[j] - current_state[j]);
        p.variance = 2.0 * g * gb0 / gb1;
    } else {
        const double g = sched.gamma(k + 1);
        const double rem0 = 1.0 - sched.gamma_bars[static_cast<size_t>(k)];
        const double rem1 = 1.0 - sched.gamma_bars[static_cast<size_t>(k) + 1];
        if (!(rem0 > 0.0))
            throw InvalidArgument("posterior_params: forward denominator 1-gammabar_k is zero");
        const double r = g / rem0;
        for (size_t j = 0; j < d; ++j)
            p.mean[j] = current_state[j] + r * (pinned_state[j] - current_state[j]);
        p.variance = 2.0 * g * rem1 / rem0;
    }
    return p;
}

TuplePoint ipmm_target(Direction dir, int k, const std::vector<double>& states, int d) {
    const int n_states = static_cast<int>(states.size()) / d;
    if (k < 0 || k + 1 >= n_states)
        throw InvalidArgument("ipmm_target: k out of range");
    TuplePoint t;
    const double* xk = state_row(states, k, d);
    const double* xk1 = state_row(states, k + 1, d);
    if (dir == Direction::Backward) {
        t.input.assign(xk1, xk1 + d);
        t.target.assign(xk, xk + d);
    } else {
        t.input.assign(xk, xk + d);
        t.target.assign(xk1, xk1 + d);
    }
    return t;
}

TuplePoint iptm_target(Direction dir, int k, const std::vector<double>& states, int d) {
    const int n_states = static_cast<int>(states.size()) / d;
    if (k < 0 || k + 1 >= n_states)
        throw InvalidArgument("iptm_target: k out of range");
    TuplePoint t;
    const double* xk = state_row(states, k, d);
    const double* xk1 = state_row(states, k + 1, d);
    const double* x0 = state_row(states, 0, d);
    const double* xN = state_row(states, n_states - 1, d);
    if (dir == Direction::Backward) {
        t.input.assign(xk1, xk1 + d);
        t.target.assign(x0, x0 + d);
    } else {
        t.input.assign(xk, xk + d);
        t.target.assign(xN, xN + d);
    }
    return t;
}

TuplePoint ipfm_target(Direction dir, int k, const std::vector<double>& states, int d,
                       const GammaSchedule& sched) {
    check_k(k, sched, "ipfm_target");
    if (!sched.normalized())
        throw InvalidArgument("ipfm_target: requires a normalized schedule");
    const int n_states = static_cast<int>(states.size()) / d;
    if (n_states != sched.n_steps() + 1)
        throw InvalidArgument("ipfm_target: trajectory length does not match schedule");
    TuplePoint t;
    const double* xk = state_row(states, k, d);
    const double* xk1 = state_row(states, k + 1, d);
    const double* x0 = state_row(states, 0, d);
    const double* xN = state_row(states, n_states - 1, d);
    t.input.resize(static_cast<size_t>(d));
    t.target.resize(static_cast<size_t>(d));
    if (dir == Direction::Backward) {
        const double gb1 = sched.gamma_bars[static_cast<size_t>(k) + 1];
        for (int j = 0; j < d; ++j) {
            t.input[static_cast<size_t>(j)] = xk1[j];
            t.target[static_cast<size_t>(j)] = (x0[j] - xk1[j]) / gb1;
        }
    } else {
        const double rem = 1.0 - sched.gamma_bars[static_cast<size_t>(k)];
        for (int j = 0; j < d; ++j) {
            t.input[static_cast<size_t>(j)] = xk[j];
            t.target[static_cast<size_t>(j)] = (xN[j] - xk[j]) / rem;
        }
    }
    return t;
}

std::vector<double> dsb_original_target(Direction dir,
                                        const std::vector<double>& x_k,
                                        const std::vector<double>& x_k1,
                                        const std::vector<double>& partner_at_xk,
                                        const std::vector<double>& partner_at_xk1) {
    const size_t d = x_k.size();
    if (x_k1.size() != d || partner_at_xk.size() != d || partner_at_xk1.size() != d)
        throw InvalidArgument("dsb_original_target: dims differ");
    // The partner difference is grouped first so that coinciding partner
    // evaluations cancel exactly and the target degenerates to the state.
    std::vector<double> t(d);
    if (dir == Direction::Backward) {
        // x_{k+1} + (F(k, x_k) - F(k, x_{k+1}))
        for (size_t j = 0; j < d; ++j)
            t[j] = x_k1[j] + (partner_at_xk[j] - partner_at_xk1[j]);
    } else {
        // x_k + (B(k+1, x_{k+1}) - B(k+1, x_k))
        for (size_t j = 0; j < d; ++j)
            t[j] = x_k[j] + (partner_at_xk1[j] - partner_at_xk[j]);
    }
    return t;
}

double terminus_mean_coeff(Direction dir, int k, const GammaSchedule& sched) {
    check_k(k, sched, "terminus_to_mean");
    const double g = sched.gamma(k + 1);
    if (dir == Direction::Backward)
        return g / sched.gamma_bars[static_cast<size_t>(k) + 1];
    const double rem = 1.0 - sched.gamma_bars[static_cast<size_t>(k)];
    if (!(rem > 0.0))
        throw InvalidArgument("terminus_to_mean: forward denominator 1-gammabar_k is zero");
    return g / rem;
}

double flow_mean_coeff(Direction dir, int k, const GammaSchedule& sched) {
    check_k(k, sched, "flow_to_mean");
    (void)dir;
    return sched.gamma(k + 1);
}

std::vector<double> terminus_to_mean(Direction dir, int k, const std::vector<double>& x,
                                     const std::vector<double>& net_output,
                                     const GammaSchedule& sched) {
    if (x.size() != net_output.size())
        throw InvalidArgument("terminus_to_mean: dims differ");
    const double r = terminus_mean_coeff(dir, k, sched);
    std::vector<double> m(x.size());
    for (size_t j = 0; j < x.size(); ++j) m[j] = x[j] + r * (net_output[j] - x[j]);
    return m;
}

std::vector<double> flow_to_mean(Direction dir, int k, const std::vector<double>& x,
                                 const std::vector<double>& net_output,
                                 const GammaSchedule& sched) {
    if (x.size() != net_output.size())
        throw InvalidArgument("flow_to_mean: dims differ");
    const double g = flow_mean_coeff(dir, k, sched);
    std::vector<double> m(x.size());
    for (size_t j = 0; j < x.size(); ++j) m[j] = x[j] + g * net_output[j];
    return m;
}

} // namespace sblab
