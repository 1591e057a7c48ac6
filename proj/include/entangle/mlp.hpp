#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "entangle/dataset.hpp"
#include "entangle/rng.hpp"

namespace entangle::nn {

// Row-major real matrix used for batched network math.
struct RealMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    bool operator==(const RealMatrix&) const = default;
};

// ReLU hidden layers, softmax output.
struct Mlp {
    std::vector<int> dims;
    std::vector<RealMatrix> weights;           // layer l: dims[l] x dims[l+1]
    std::vector<std::vector<double>> biases;   // layer l: dims[l+1]

    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t parameter_count() const;
    bool all_finite() const;
    bool operator==(const Mlp&) const = default;
};

// He-normal weights (std = sqrt(2/fan_in)), zero biases.
Mlp mlp_new(const std::vector<int>& dims, std::uint64_t seed);

std::vector<double> forward(const Mlp& m, std::span<const double> x);

// Batched inference: x is (count x input_dim), result is (count x classes).
RealMatrix forward_batch(const Mlp& m, const RealMatrix& x);

// -sum target_c ln(predicted_c), predictions clamped to [1e-12, 1].
double cross_entropy(std::span<const double> target, std::span<const double> predicted);

struct LossReport {
    double total = 0.0;
    double supervised = 0.0;
    double unsupervised = 0.0;
    double lambda_u = 0.0;
};

struct Gradients {
    std::vector<RealMatrix> weights;
    std::vector<std::vector<double>> biases;
    static Gradients zeros_like(const Mlp& m);
    bool all_finite() const;
};

// Rows of features with hard class labels.
struct BatchView {
    const double* x = nullptr;  // row-major count x dim
    const int* labels = nullptr;
    std::size_t count = 0;
    std::size_t dim = 0;
};

// L_s + lambda_u L_u with L_s, L_u means of per-sample cross-entropies over
// the two batches; gradients are exact analytic backprop of the total.
LossReport loss_and_grad(const Mlp& m, const BatchView& labeled, const BatchView& pseudo,
                         double lambda_u, Gradients& grads);

struct AdamState {
    std::vector<RealMatrix> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;
    long t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    static AdamState zeros_like(const Mlp& m);
};

// Standard bias-corrected Adam update; rejects non-finite gradients.
void adam_step(Mlp& m, const Gradients& grads, AdamState& state, double lr);

// Feature matrix plus labels, packed once per training run.
struct TrainView {
    RealMatrix x;
    std::vector<int> labels;
    std::size_t count() const { return x.rows; }
};
TrainView pack_training_view(const Dataset& ds);

// `epochs` passes; each epoch shuffles both sets and steps Adam on
// mini-batches: the labeled set in batches of `batch`, the pseudo set split
// into matching chunks so both sets are covered exactly once per epoch.
void train_epochs_inplace(Mlp& m, AdamState& state, const TrainView& labeled,
                          const TrainView& pseudo, double lambda_u, int epochs, double lr,
                          int batch, Rng& rng);

Mlp train_epochs(Mlp m, const Dataset& labeled, const Dataset& pseudo, double lambda_u,
                 int epochs, double lr, int batch, Rng& rng);

// Text model format: header line `mlp-v1 dims=... activation=relu
// output=softmax`, then one `W<i>=`/`b<i>=` line per tensor, 17 significant
// digits, row-major.
void save_model(const Mlp& m, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);
std::string model_to_string(const Mlp& m);
Mlp model_from_string(const std::string& text);

// Worker cap for the batched kernels. Results are bit-identical for any
// value; 1 means serial.
void set_gemm_threads(int threads);
int gemm_threads();

}  // namespace entangle::nn
