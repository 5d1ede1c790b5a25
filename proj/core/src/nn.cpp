#include "sblab/nn.hpp"

#include "sblab/errors.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace sblab {

std::vector<double> timestep_embed(int k, int n_steps, int embed_dim) {
    if (n_steps <= 0) throw InvalidArgument("timestep_embed: N must be positive");
    if (embed_dim <= 0 || embed_dim % 2 != 0)
        throw InvalidArgument("timestep_embed: embed_dim must be positive and even");
    if (k < 0 || k > n_steps)
        throw InvalidArgument("timestep_embed: k out of [0, N], got " + std::to_string(k));
    const int m = embed_dim / 2;
    const double u = double(k) / double(n_steps);
    std::vector<double> e(static_cast<size_t>(embed_dim));
    for (int i = 0; i < m; ++i) {
        double w = (m == 1) ? 1.0 : std::pow(1000.0, double(i) / double(m - 1));
        e[static_cast<size_t>(i)] = std::sin(w * u);
        e[static_cast<size_t>(m + i)] = std::cos(w * u);
    }
    return e;
}

Mlp make_mlp(int d, int hidden, int layers, int embed_dim, int activation,
             int n_steps, Rng& rng) {
    if (d <= 0 || hidden <= 0 || layers <= 0)
        throw InvalidArgument("make_mlp: dimensions and layer count must be positive");
    if (embed_dim <= 0 || embed_dim % 2 != 0)
        throw InvalidArgument("make_mlp: embed_dim must be positive and even");
    if (activation != kActSilu && activation != kActTanh)
        throw InvalidArgument("make_mlp: unknown activation id");
    if (n_steps <= 0) throw InvalidArgument("make_mlp: n_steps must be positive");

    Mlp net;
    net.activation = activation;
    net.embed_dim = embed_dim;
    net.n_steps = n_steps;
    net.dims.push_back(d + embed_dim);
    for (int l = 1; l < layers; ++l) net.dims.push_back(hidden);
    net.dims.push_back(d);

    for (int l = 0; l < layers; ++l) {
        int in = net.dims[static_cast<size_t>(l)];
        int out = net.dims[static_cast<size_t>(l) + 1];
        double bound = 1.0 / std::sqrt(double(in));
        std::vector<float> w(static_cast<size_t>(out) * static_cast<size_t>(in));
        std::vector<float> bias(static_cast<size_t>(out));
        for (auto& v : w) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
        for (auto& v : bias) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
        net.W.push_back(std::move(w));
        net.b.push_back(std::move(bias));
    }
    return net;
}

Mlp make_mlp(int d, const MlpArch& arch, int n_steps, Rng& rng) {
    return make_mlp(d, arch.hidden, arch.layers, arch.embed_dim, arch.activation, n_steps, rng);
}

namespace {

inline double act_eval(int id, double z) {
    if (id == kActSilu) {
        double s = 1.0 / (1.0 + std::exp(-z));
        return z * s;
    }
    return std::tanh(z);
}

inline double act_deriv(int id, double z) {
    if (id == kActSilu) {
        double s = 1.0 / (1.0 + std::exp(-z));
        return s * (1.0 + z * (1.0 - s));
    }
    double t = std::tanh(z);
    return 1.0 - t * t;
}

const double* embed_row(const Mlp& net, MlpWorkspace& ws, int k) {
    const size_t e = static_cast<size_t>(net.embed_dim);
    const size_t rows = static_cast<size_t>(net.n_steps) + 1;
    if (ws.embed_table.size() != rows * e) {
        ws.embed_table.assign(rows * e, 0.0);
        ws.embed_ready.assign(rows, 0);
    }
    if (k < 0 || k > net.n_steps)
        throw InvalidArgument("mlp_forward: timestep " + std::to_string(k) +
                              " out of [0, " + std::to_string(net.n_steps) + "]");
    auto idx = static_cast<size_t>(k);
    if (!ws.embed_ready[idx]) {
        std::vector<double> row = timestep_embed(k, net.n_steps, net.embed_dim);
        std::memcpy(&ws.embed_table[idx * e], row.data(), e * sizeof(double));
        ws.embed_ready[idx] = 1;
    }
    return &ws.embed_table[idx * e];
}

void forward_impl(const Mlp& net, const int* ks, int k_same, const double* X, int n,
                  double* Y, MlpWorkspace& ws) {
    const int L = net.n_layers();
    const int din = net.d_in();
    const size_t in0 = static_cast<size_t>(net.dims[0]);

    ws.acts.resize(static_cast<size_t>(L) + 1);
    ws.pre.resize(static_cast<size_t>(L));
    ws.acts[0].resize(static_cast<size_t>(n) * in0);
    for (int i = 0; i < n; ++i) {
        double* row = &ws.acts[0][static_cast<size_t>(i) * in0];
        std::memcpy(row, X + static_cast<size_t>(i) * static_cast<size_t>(din),
                    static_cast<size_t>(din) * sizeof(double));
        const double* emb = embed_row(net, ws, ks ? ks[i] : k_same);
        std::memcpy(row + din, emb, static_cast<size_t>(net.embed_dim) * sizeof(double));
    }

    for (int l = 0; l < L; ++l) {
        const int in = net.dims[static_cast<size_t>(l)];
        const int out = net.dims[static_cast<size_t>(l) + 1];
        const bool last = (l == L - 1);
        ws.acts[static_cast<size_t>(l) + 1].resize(static_cast<size_t>(n) * static_cast<size_t>(out));
        if (!last) ws.pre[static_cast<size_t>(l)].resize(static_cast<size_t>(n) * static_cast<size_t>(out));
        const float* Wl = net.W[static_cast<size_t>(l)].data();
        const float* bl = net.b[static_cast<size_t>(l)].data();
        const double* A = ws.acts[static_cast<size_t>(l)].data();
        double* Z = ws.acts[static_cast<size_t>(l) + 1].data();
        double* P = last ? nullptr : ws.pre[static_cast<size_t>(l)].data();
        for (int i = 0; i < n; ++i) {
            const double* a = A + static_cast<size_t>(i) * static_cast<size_t>(in);
            double* z = Z + static_cast<size_t>(i) * static_cast<size_t>(out);
            for (int o = 0; o < out; ++o) {
                const float* wrow = Wl + static_cast<size_t>(o) * static_cast<size_t>(in);
                double acc = static_cast<double>(bl[o]);
                for (int j = 0; j < in; ++j) acc += static_cast<double>(wrow[j]) * a[j];
                if (last) {
                    z[o] = acc;
                } else {
                    P[static_cast<size_t>(i) * static_cast<size_t>(out) + o] = acc;
                    z[o] = act_eval(net.activation, acc);
                }
            }
        }
    }
    std::memcpy(Y, ws.acts[static_cast<size_t>(L)].data(),
                static_cast<size_t>(n) * static_cast<size_t>(net.d_out()) * sizeof(double));
}

} // namespace

void mlp_forward(const Mlp& net, const int* ks, const double* X, int n, double* Y,
                 MlpWorkspace* ws) {
    if (n <= 0) throw InvalidArgument("mlp_forward: empty batch");
    if (ws) {
        forward_impl(net, ks, 0, X, n, Y, *ws);
    } else {
        MlpWorkspace local;
        forward_impl(net, ks, 0, X, n, Y, local);
    }
}

void mlp_forward(const Mlp& net, int k, const double* X, int n, double* Y,
                 MlpWorkspace* ws) {
    if (n <= 0) throw InvalidArgument("mlp_forward: empty batch");
    if (ws) {
        forward_impl(net, nullptr, k, X, n, Y, *ws);
    } else {
        MlpWorkspace local;
        forward_impl(net, nullptr, k, X, n, Y, local);
    }
}

void MlpGrads::zero() {
    for (auto& g : gW) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
}

MlpGrads make_grads(const Mlp& net) {
    MlpGrads g;
    for (int l = 0; l < net.n_layers(); ++l) {
        g.gW.emplace_back(net.W[static_cast<size_t>(l)].size(), 0.0);
        g.gb.emplace_back(net.b[static_cast<size_t>(l)].size(), 0.0);
    }
    return g;
}

void mlp_backward(const Mlp& net, MlpWorkspace& ws, const double* dY, int n,
                  MlpGrads& grads) {
    const int L = net.n_layers();
    const size_t nn = static_cast<size_t>(n);

    ws.dz.assign(nn * static_cast<size_t>(net.d_out()), 0.0);
    std::memcpy(ws.dz.data(), dY, nn * static_cast<size_t>(net.d_out()) * sizeof(double));

    for (int l = L - 1; l >= 0; --l) {
        const int in = net.dims[static_cast<size_t>(l)];
        const int out = net.dims[static_cast<size_t>(l) + 1];
        const float* Wl = net.W[static_cast<size_t>(l)].data();
        const double* A = ws.acts[static_cast<size_t>(l)].data();
        double* gW = grads.gW[static_cast<size_t>(l)].data();
        double* gb = grads.gb[static_cast<size_t>(l)].data();

        for (int i = 0; i < n; ++i) {
            const double* dz = &ws.dz[static_cast<size_t>(i) * static_cast<size_t>(out)];
            const double* a = A + static_cast<size_t>(i) * static_cast<size_t>(in);
            for (int o = 0; o < out; ++o) {
                const double g = dz[o];
                if (g == 0.0) continue;
                double* gw = gW + static_cast<size_t>(o) * static_cast<size_t>(in);
                for (int j = 0; j < in; ++j) gw[j] += g * a[j];
                gb[o] += g;
            }
        }
        if (l == 0) break;

        ws.da.assign(nn * static_cast<size_t>(in), 0.0);
        for (int i = 0; i < n; ++i) {
            const double* dz = &ws.dz[static_cast<size_t>(i) * static_cast<size_t>(out)];
            double* da = &ws.da[static_cast<size_t>(i) * static_cast<size_t>(in)];
            for (int o = 0; o < out; ++o) {
                const double g = dz[o];
                if (g == 0.0) continue;
                const float* wrow = Wl + static_cast<size_t>(o) * static_cast<size_t>(in);
                for (int j = 0; j < in; ++j) da[j] += g * static_cast<double>(wrow[j]);
            }
        }
        // Through the previous layer's activation.
        const double* P = ws.pre[static_cast<size_t>(l) - 1].data();
        ws.dz.assign(nn * static_cast<size_t>(in), 0.0);
        for (size_t t = 0; t < nn * static_cast<size_t>(in); ++t)
            ws.dz[t] = ws.da[t] * act_deriv(net.activation, P[t]);
    }
}

double mse_grad(const Mlp& net, const int* ks, const double* X, int n,
                const double* targets, MlpGrads& grads, MlpWorkspace* ws) {
    if (n <= 0) throw InvalidArgument("mse_grad: empty batch");
    MlpWorkspace local;
    MlpWorkspace& w = ws ? *ws : local;
    const int dout = net.d_out();
    std::vector<double> Y(static_cast<size_t>(n) * static_cast<size_t>(dout));
    mlp_forward(net, ks, X, n, Y.data(), &w);

    const double inv = 1.0 / (double(n) * double(dout));
    double loss = 0.0;
    std::vector<double> dY(Y.size());
    for (size_t t = 0; t < Y.size(); ++t) {
        double r = Y[t] - targets[t];
        loss += r * r * inv;
        dY[t] = 2.0 * r * inv;
    }
    if (!std::isfinite(loss)) throw NumericError("mse_grad: non-finite loss");
    mlp_backward(net, w, dY.data(), n, grads);
    return loss;
}

double mse_grad(const Mlp& net, int k, const double* X, int n,
                const double* targets, MlpGrads& grads) {
    std::vector<int> ks(static_cast<size_t>(n), k);
    return mse_grad(net, ks.data(), X, n, targets, grads, nullptr);
}

AdamState make_adam_state(const Mlp& net) {
    AdamState s;
    for (int l = 0; l < net.n_layers(); ++l) {
        s.mW.emplace_back(net.W[static_cast<size_t>(l)].size(), 0.0);
        s.vW.emplace_back(net.W[static_cast<size_t>(l)].size(), 0.0);
        s.mb.emplace_back(net.b[static_cast<size_t>(l)].size(), 0.0);
        s.vb.emplace_back(net.b[static_cast<size_t>(l)].size(), 0.0);
    }
    return s;
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr) {
    for (const auto& g : grads.gW)
        for (double v : g)
            if (!std::isfinite(v)) throw NumericError("adam_step: non-finite gradient");
    for (const auto& g : grads.gb)
        for (double v : g)
            if (!std::isfinite(v)) throw NumericError("adam_step: non-finite gradient");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    auto update = [&](std::vector<float>& w, const std::vector<double>& g,
                      std::vector<double>& m, std::vector<double>& v) {
        for (size_t t = 0; t < w.size(); ++t) {
            m[t] = state.beta1 * m[t] + (1.0 - state.beta1) * g[t];
            v[t] = state.beta2 * v[t] + (1.0 - state.beta2) * g[t] * g[t];
            double mh = m[t] / bc1;
            double vh = v[t] / bc2;
            double nw = static_cast<double>(w[t]) - lr * mh / (std::sqrt(vh) + state.eps);
            w[t] = static_cast<float>(nw);
        }
    };
    for (int l = 0; l < net.n_layers(); ++l) {
        update(net.W[static_cast<size_t>(l)], grads.gW[static_cast<size_t>(l)],
               state.mW[static_cast<size_t>(l)], state.vW[static_cast<size_t>(l)]);
        update(net.b[static_cast<size_t>(l)], grads.gb[static_cast<size_t>(l)],
               state.mb[static_cast<size_t>(l)], state.vb[static_cast<size_t>(l)]);
    }
}

EmaState make_ema(const Mlp& net, double decay) {
    EmaState e;
    e.decay = decay;
    e.W = net.W;
    e.b = net.b;
    return e;
}

void ema_update(EmaState& ema, const Mlp& net) {
    auto blend = [&](std::vector<float>& s, const std::vector<float>& w) {
        for (size_t t = 0; t < s.size(); ++t)
            s[t] = static_cast<float>(ema.decay * static_cast<double>(s[t]) +
                                      (1.0 - ema.decay) * static_cast<double>(w[t]));
    };
    for (size_t l = 0; l < ema.W.size(); ++l) {
        blend(ema.W[l], net.W[l]);
        blend(ema.b[l], net.b[l]);
    }
}

Mlp with_ema_weights(const Mlp& net, const EmaState& ema) {
    Mlp out = net;
    out.W = ema.W;
    out.b = ema.b;
    return out;
}

} // namespace sblab
