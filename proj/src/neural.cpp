#include "vecsim/neural.hpp"

#include <cblas.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "vecsim/errors.hpp"

namespace vecsim {

namespace {

// All matrix products go through single-threaded BLAS so that results are
// reproducible run-to-run on the same machine.
struct BlasInit {
    BlasInit() { openblas_set_num_threads(1); }
};
const BlasInit blas_init;

void check_same_shape(const DenseNet& net, const Gradients& grads) {
    if (grads.weights.size() != net.weights.size() || grads.biases.size() != net.biases.size())
        throw ContractViolation("gradient/parameter layer counts differ");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (grads.weights[l].size() != net.weights[l].size() ||
            grads.biases[l].size() != net.biases[l].size())
            throw ContractViolation("gradient/parameter shapes differ");
    }
}

} // namespace

std::size_t DenseNet::parameter_count() const {
    std::size_t total = 0;
    for (const auto& w : weights) total += w.size();
    for (const auto& b : biases) total += b.size();
    return total;
}

DenseNet DenseNet::make(std::vector<int> sizes, std::vector<Activation> acts, Rng& rng) {
    if (sizes.size() < 2 || acts.size() != sizes.size() - 1)
        throw ContractViolation("DenseNet::make: need one activation per layer");
    DenseNet net;
    net.layer_sizes = std::move(sizes);
    net.activations = std::move(acts);
    const int n_layers = net.layers();
    net.weights.resize(static_cast<std::size_t>(n_layers));
    net.biases.resize(static_cast<std::size_t>(n_layers));
    for (int l = 0; l < n_layers; ++l) {
        const int fan_in = net.layer_sizes[static_cast<std::size_t>(l)];
        const int fan_out = net.layer_sizes[static_cast<std::size_t>(l) + 1];
        const double bound = (l == n_layers - 1) ? 3e-3 : 1.0 / std::sqrt(fan_in);
        auto& w = net.weights[static_cast<std::size_t>(l)];
        auto& b = net.biases[static_cast<std::size_t>(l)];
        w.resize(static_cast<std::size_t>(fan_in) * fan_out);
        b.resize(static_cast<std::size_t>(fan_out));
        for (auto& value : w) value = rng.uniform(-bound, bound);
        for (auto& value : b) value = rng.uniform(-bound, bound);
    }
    return net;
}

void forward(const DenseNet& net, const double* input, int batch, ForwardCache& cache) {
    if (batch < 1) throw ContractViolation("forward: batch must be >= 1");
    const int n_layers = net.layers();
    cache.batch = batch;
    cache.values.resize(static_cast<std::size_t>(n_layers) + 1);
    cache.pre.resize(static_cast<std::size_t>(n_layers));
    cache.delta.resize(static_cast<std::size_t>(n_layers));

    cache.values[0].assign(input, input + static_cast<std::size_t>(batch) * net.input_size());

    for (int l = 0; l < n_layers; ++l) {
        const int in = net.layer_sizes[static_cast<std::size_t>(l)];
        const int out = net.layer_sizes[static_cast<std::size_t>(l) + 1];
        auto& z = cache.pre[static_cast<std::size_t>(l)];
        auto& a = cache.values[static_cast<std::size_t>(l) + 1];
        z.resize(static_cast<std::size_t>(batch) * out);
        a.resize(z.size());

        // z = x * W^T
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, batch, out, in, 1.0,
                    cache.values[static_cast<std::size_t>(l)].data(), in,
                    net.weights[static_cast<std::size_t>(l)].data(), in, 0.0, z.data(), out);

        const double* bias = net.biases[static_cast<std::size_t>(l)].data();
        const Activation act = net.activations[static_cast<std::size_t>(l)];
        for (int row = 0; row < batch; ++row) {
            double* zr = z.data() + static_cast<std::size_t>(row) * out;
            double* ar = a.data() + static_cast<std::size_t>(row) * out;
            for (int j = 0; j < out; ++j) {
                const double v = zr[j] + bias[j];
                zr[j] = v;
                switch (act) {
                    case Activation::identity: ar[j] = v; break;
                    case Activation::rectifier: ar[j] = v > 0.0 ? v : 0.0; break;
                    case Activation::sigmoid: ar[j] = 1.0 / (1.0 + std::exp(-v)); break;
                }
            }
        }
    }
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input) {
    if (static_cast<int>(input.size()) != net.input_size())
        throw ContractViolation("forward: input dimension mismatch");
    thread_local ForwardCache cache;
    forward(net, input.data(), 1, cache);
    return cache.output();
}

Gradients Gradients::zeros_like(const DenseNet& net) {
    Gradients g;
    g.weights.resize(net.weights.size());
    g.biases.resize(net.biases.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.weights[l].assign(net.weights[l].size(), 0.0);
        g.biases[l].assign(net.biases[l].size(), 0.0);
    }
    return g;
}

void backward(const DenseNet& net, ForwardCache& cache, const double* output_grad,
              Gradients* grads, double* input_grad) {
    const int n_layers = net.layers();
    const int batch = cache.batch;
    if (batch < 1 || cache.values.size() != static_cast<std::size_t>(n_layers) + 1)
        throw ContractViolation("backward: cache does not match a forward pass");
    if (grads != nullptr && grads->weights.size() != static_cast<std::size_t>(n_layers))
        *grads = Gradients::zeros_like(net);

    for (int l = n_layers - 1; l >= 0; --l) {
        const int in = net.layer_sizes[static_cast<std::size_t>(l)];
        const int out = net.layer_sizes[static_cast<std::size_t>(l) + 1];
        auto& delta = cache.delta[static_cast<std::size_t>(l)];
        delta.resize(static_cast<std::size_t>(batch) * out);

        // delta = upstream gradient .* activation'(z).  For inner layers the
        // upstream dL/dx was written into this same buffer by the previous
        // iteration, so the elementwise product runs in place.
        const double* upstream = (l == n_layers - 1) ? output_grad : delta.data();
        const Activation act = net.activations[static_cast<std::size_t>(l)];
        const double* z = cache.pre[static_cast<std::size_t>(l)].data();
        const double* a = cache.values[static_cast<std::size_t>(l) + 1].data();
        for (std::size_t i = 0; i < delta.size(); ++i) {
            double g = upstream[i];
            switch (act) {
                case Activation::identity: break;
                case Activation::rectifier: g = z[i] > 0.0 ? g : 0.0; break;
                case Activation::sigmoid: g *= a[i] * (1.0 - a[i]); break;
            }
            delta[i] = g;
        }

        // dW = delta^T * x ; db = column sums of delta
        if (grads != nullptr) {
            cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, out, in, batch, 1.0,
                        delta.data(), out, cache.values[static_cast<std::size_t>(l)].data(), in,
                        0.0, grads->weights[static_cast<std::size_t>(l)].data(), in);
            auto& db = grads->biases[static_cast<std::size_t>(l)];
            std::fill(db.begin(), db.end(), 0.0);
            for (int row = 0; row < batch; ++row) {
                const double* dr = delta.data() + static_cast<std::size_t>(row) * out;
                for (int j = 0; j < out; ++j) db[static_cast<std::size_t>(j)] += dr[j];
            }
        }

        // propagate dL/dx = delta * W into the next iteration's upstream
        if (l > 0) {
            auto& downstream = cache.delta[static_cast<std::size_t>(l) - 1];
            downstream.resize(static_cast<std::size_t>(batch) * in);
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, batch, in, out, 1.0,
                        delta.data(), out, net.weights[static_cast<std::size_t>(l)].data(), in,
                        0.0, downstream.data(), in);
        } else if (input_grad != nullptr) {
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, batch, in, out, 1.0,
                        delta.data(), out, net.weights[static_cast<std::size_t>(l)].data(), in,
                        0.0, input_grad, in);
        }
    }
}

AdamState AdamState::make(const DenseNet& net, double lr, double beta1, double beta2,
                          double epsilon) {
    AdamState state;
    state.learning_rate = lr;
    state.beta1 = beta1;
    state.beta2 = beta2;
    state.epsilon = epsilon;
    state.first_moment = Gradients::zeros_like(net);
    state.second_moment = Gradients::zeros_like(net);
    return state;
}

void adam_step(AdamState& state, DenseNet& net, const Gradients& grads) {
    check_same_shape(net, grads);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    double checksum = 0.0;

    auto update = [&](std::vector<double>& params, const std::vector<double>& g,
                      std::vector<double>& m, std::vector<double>& v) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double grad = g[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad * grad;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
            checksum += params[i];
        }
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        update(net.weights[l], grads.weights[l], state.first_moment.weights[l],
               state.second_moment.weights[l]);
        update(net.biases[l], grads.biases[l], state.first_moment.biases[l],
               state.second_moment.biases[l]);
    }
    if (!std::isfinite(checksum))
        throw TrainingDivergenceError("adam_step: non-finite parameters after update");
}

void soft_update(DenseNet& target, const DenseNet& online, double tau) {
    if (target.layer_sizes != online.layer_sizes)
        throw ContractViolation("soft_update: mismatched architectures");
    // The (1-tau)*t + tau*o form is exact at both endpoints: tau=0 leaves the
    // target untouched and tau=1 copies the online parameters bit for bit.
    auto blend = [tau](std::vector<double>& t, const std::vector<double>& o) {
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = (1.0 - tau) * t[i] + tau * o[i];
    };
    for (std::size_t l = 0; l < target.weights.size(); ++l) {
        blend(target.weights[l], online.weights[l]);
        blend(target.biases[l], online.biases[l]);
    }
}

const std::vector<double>& OuNoise::sample(Rng& rng) {
    for (double& x : value) x += -decay * x + volatility * rng.normal();
    return value;
}

namespace {

constexpr char kCheckpointMagic[8] = {'V', 'E', 'C', 'N', 'E', 'T', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const DenseNet*>>& nets) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open checkpoint for writing: " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod(out, static_cast<std::uint32_t>(nets.size()));
    for (const auto& [name, net] : nets) {
        write_pod(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<std::uint32_t>(net->layer_sizes.size()));
        for (int s : net->layer_sizes) write_pod(out, static_cast<std::int64_t>(s));
        for (Activation a : net->activations) write_pod(out, static_cast<std::uint8_t>(a));
        for (std::size_t l = 0; l < net->weights.size(); ++l) {
            out.write(reinterpret_cast<const char*>(net->weights[l].data()),
                      static_cast<std::streamsize>(net->weights[l].size() * sizeof(double)));
            out.write(reinterpret_cast<const char*>(net->biases[l].data()),
                      static_cast<std::streamsize>(net->biases[l].size() * sizeof(double)));
        }
    }
    if (!out) throw ConfigError("checkpoint write failed: " + path.string());
}

std::map<std::string, DenseNet> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw ConfigError("not a parameter checkpoint: " + path.string());
    std::map<std::string, DenseNet> nets;
    const auto count = read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        DenseNet net;
        const auto n_sizes = read_pod<std::uint32_t>(in);
        net.layer_sizes.resize(n_sizes);
        for (auto& s : net.layer_sizes) s = static_cast<int>(read_pod<std::int64_t>(in));
        net.activations.resize(n_sizes - 1);
        for (auto& a : net.activations) a = static_cast<Activation>(read_pod<std::uint8_t>(in));
        net.weights.resize(n_sizes - 1);
        net.biases.resize(n_sizes - 1);
        for (std::size_t l = 0; l + 1 < n_sizes; ++l) {
            const auto in_dim = static_cast<std::size_t>(net.layer_sizes[l]);
            const auto out_dim = static_cast<std::size_t>(net.layer_sizes[l + 1]);
            net.weights[l].resize(in_dim * out_dim);
            net.biases[l].resize(out_dim);
            in.read(reinterpret_cast<char*>(net.weights[l].data()),
                    static_cast<std::streamsize>(net.weights[l].size() * sizeof(double)));
            in.read(reinterpret_cast<char*>(net.biases[l].data()),
                    static_cast<std::streamsize>(net.biases[l].size() * sizeof(double)));
        }
        if (!in) throw ConfigError("truncated checkpoint: " + path.string());
        nets.emplace(std::move(name), std::move(net));
    }
    return nets;
}

} // namespace vecsim
