#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vecsim/rng.hpp"

namespace vecsim {

enum class Activation : std::uint8_t { identity = 0, rectifier = 1, sigmoid = 2 };

// Fully connected network with double-precision parameters.  Layer l maps
// layer_sizes[l] -> layer_sizes[l+1] through weights[l] (row-major, one row
// per output unit), biases[l] and activations[l].
struct DenseNet {
    std::vector<int> layer_sizes;
    std::vector<Activation> activations;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    int layers() const { return static_cast<int>(activations.size()); }
    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;

    // Uniform init: hidden layers at +-1/sqrt(fan_in), the final layer at
    // +-3e-3 so that initial outputs (and thus early bootstrap targets)
    // stay small.
    static DenseNet make(std::vector<int> sizes, std::vector<Activation> acts, Rng& rng);
};

// Activations and pre-activations of one batched forward pass, plus scratch
// for the backward sweep.  Reused across calls to avoid reallocation.
struct ForwardCache {
    int batch = 0;
    std::vector<std::vector<double>> values;  // layers()+1 entries; [0] is the input
    std::vector<std::vector<double>> pre;     // pre-activation of each layer
    std::vector<std::vector<double>> delta;   // backward scratch

    const std::vector<double>& output() const { return values.back(); }
};

// Batched evaluation: `input` is batch x input_size row-major.
void forward(const DenseNet& net, const double* input, int batch, ForwardCache& cache);

// Single-sample convenience wrapper.
std::vector<double> forward(const DenseNet& net, std::span<const double> input);

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    static Gradients zeros_like(const DenseNet& net);
};

// Reverse-mode sweep for the forward pass recorded in `cache`.
// `output_grad` is batch x output_size row-major; parameter gradients are
// summed over the batch and overwrite `*grads` (pass nullptr to skip them).
// When `input_grad` is non-null the gradient with respect to the network
// input (batch x input_size) is written there — the critic's action-input
// gradient is obtained this way.
void backward(const DenseNet& net, ForwardCache& cache, const double* output_grad,
              Gradients* grads, double* input_grad = nullptr);

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    Gradients first_moment;
    Gradients second_moment;

    static AdamState make(const DenseNet& net, double lr, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);
};

// Bias-corrected Adam descent step.  Throws TrainingDivergenceError when
// gradients or updated parameters are non-finite.
void adam_step(AdamState& state, DenseNet& net, const Gradients& grads);

// target <- tau*online + (1-tau)*target, elementwise.
void soft_update(DenseNet& target, const DenseNet& online, double tau);

// Ornstein-Uhlenbeck exploration noise with unit time step:
// x <- x - decay*x + volatility*N(0,1) per dimension.
struct OuNoise {
    std::vector<double> value;
    double decay;
    double volatility;

    OuNoise(int dims, double decay_rate, double vol)
        : value(static_cast<std::size_t>(dims), 0.0), decay(decay_rate), volatility(vol) {}
    void reset() { std::fill(value.begin(), value.end(), 0.0); }
    const std::vector<double>& sample(Rng& rng);
};

// Versioned binary checkpoint of named networks; round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const DenseNet*>>& nets);
std::map<std::string, DenseNet> load_checkpoint(const std::filesystem::path& path);

} // namespace vecsim
