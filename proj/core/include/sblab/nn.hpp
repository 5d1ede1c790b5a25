#pragma once

#include "sblab/rng.hpp"

#include <vector>

namespace sblab {

// Activation identifiers (persisted in checkpoints).
inline constexpr int kActSilu = 0; // x * sigmoid(x)
inline constexpr int kActTanh = 1;

// Dense network conditioned on a discrete timestep k via a sinusoidal
// embedding of k/N concatenated to the input point. Weights are stored as
// 32-bit floats (the persistence format), all arithmetic runs in f64.
struct Mlp {
    std::vector<int> dims;              // layer io sizes: {d + embed_dim, ..., d}
    std::vector<std::vector<float>> W;  // row-major out x in, one per layer
    std::vector<std::vector<float>> b;  // one per layer
    int activation = kActSilu;
    int embed_dim = 0;
    int n_steps = 0;                    // the N the embedding divides by

    int n_layers() const { return static_cast<int>(W.size()); }
    int d_in() const { return dims.front() - embed_dim; }
    int d_out() const { return dims.back(); }
    long long n_params() const {
        long long p = 0;
        for (size_t l = 0; l < W.size(); ++l)
            p += static_cast<long long>(W[l].size()) + static_cast<long long>(b[l].size());
        return p;
    }
};

// Sinusoidal features of k/N: [sin(w_i u)..., cos(w_i u)...] with
// embed_dim/2 frequencies geometrically spaced in [1, 1000].
std::vector<double> timestep_embed(int k, int n_steps, int embed_dim);

// layers = number of linear layers; hidden widths all equal.
// Weight init: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Mlp make_mlp(int d, int hidden, int layers, int embed_dim, int activation,
             int n_steps, Rng& rng);

// Architecture bundle used by the pretrainer and the bridge trainer.
struct MlpArch {
    int hidden = 128;
    int layers = 10;
    int embed_dim = 16;
    int activation = kActSilu;
};
Mlp make_mlp(int d, const MlpArch& arch, int n_steps, Rng& rng);

// Scratch buffers reused across calls; also retains the per-layer
// activations a backward pass needs.
struct MlpWorkspace {
    std::vector<std::vector<double>> acts; // acts[0] = input rows, acts[l+1] = layer l output
    std::vector<std::vector<double>> pre;  // pre-activations of hidden layers
    std::vector<double> dz, da;            // backward scratch
    std::vector<double> embed_table;       // lazily filled (n_steps+1) x embed_dim
    std::vector<char> embed_ready;
};

// Y[i] = net(ks[i], X[i]); X is n x d_in row-major, Y n x d_out.
// Pass a workspace to reuse buffers and to enable mlp_backward.
void mlp_forward(const Mlp& net, const int* ks, const double* X, int n, double* Y,
                 MlpWorkspace* ws = nullptr);
// Whole batch at one timestep.
void mlp_forward(const Mlp& net, int k, const double* X, int n, double* Y,
                 MlpWorkspace* ws = nullptr);

struct MlpGrads {
    std::vector<std::vector<double>> gW, gb;
    void zero();
};
MlpGrads make_grads(const Mlp& net);

// Accumulate exact reverse-mode gradients into `grads` given upstream
// dL/dY (n x d_out). `ws` must hold the activations of the matching forward.
void mlp_backward(const Mlp& net, MlpWorkspace& ws, const double* dY, int n,
                  MlpGrads& grads);

// loss = mean over batch and coordinates of squared error; gradients of that
// loss. Throws NumericError if the loss is not finite (NaN inputs).
double mse_grad(const Mlp& net, const int* ks, const double* X, int n,
                const double* targets, MlpGrads& grads, MlpWorkspace* ws = nullptr);
double mse_grad(const Mlp& net, int k, const double* X, int n,
                const double* targets, MlpGrads& grads);

struct AdamState {
    std::vector<std::vector<double>> mW, vW, mb, vb;
    long long step = 0;
    double beta1 = 0.9, beta2 = 0.99, eps = 1e-8;
};
AdamState make_adam_state(const Mlp& net);

// Standard Adam with bias correction; f64 moments, weights written back as
// f32. Throws NumericError on non-finite gradients, leaving weights alone.
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr);

// Optional exponential moving average of the weights (disabled by default
// in the trainer).
struct EmaState {
    std::vector<std::vector<float>> W, b;
    double decay = 0.999;
};
EmaState make_ema(const Mlp& net, double decay = 0.999);
void ema_update(EmaState& ema, const Mlp& net);
Mlp with_ema_weights(const Mlp& net, const EmaState& ema);

} // namespace sblab
