#pragma once

#include <cstdint>
#include <vector>

#include "mmn/tensor.hpp"

namespace mmn {

// Dense network topology: rectified-linear between hidden layers, identity at
// the output, optional batch norm after each hidden linear layer.
struct NetworkSpec {
    int input_dim = 0;
    int output_dim = 0;
    std::vector<int> hidden_layers;
    bool use_batch_norm = true;

    void validate() const;
    bool operator==(const NetworkSpec&) const = default;
};

enum class Mode { Training, Inference };

template <typename T>
struct Gradients {
    std::vector<Matrix<T>> weight;
    std::vector<std::vector<T>> bias;
    std::vector<std::vector<T>> bn_scale;
    std::vector<std::vector<T>> bn_shift;
};

// Per-layer intermediates kept by a cached forward pass for the backward
// passes. `input` is only populated when parameter gradients are requested.
template <typename T>
struct ForwardCache {
    struct Layer {
        Matrix<T> input;
        Matrix<T> linear_out;
        Matrix<T> bn_xhat;
        std::vector<T> bn_var;
        Matrix<T> act_in;  // relu input (post-bn when bn is on)
    };
    std::vector<Layer> layers;
    Matrix<T> output;
};

// A dense network plus its learned state. Copyable by value; a copy is the
// snapshot mechanism used for best-validation checkpointing.
template <typename T>
class Network {
public:
    Network() = default;
    Network(NetworkSpec spec, std::uint64_t init_seed);

    const NetworkSpec& spec() const { return spec_; }
    Mode mode() const { return mode_; }
    void set_mode(Mode m) { mode_ = m; }

    std::size_t num_linear() const { return weights_.size(); }
    std::size_t num_bn() const { return bn_scale_.size(); }

    // Forward pass in the current mode. Training mode normalizes with batch
    // statistics and updates the running statistics; inference mode is pure.
    Matrix<T> forward(const Matrix<T>& x);

    // Pure inference-mode forward, usable on a shared const network.
    Matrix<T> forward_inference(const Matrix<T>& x) const;

    // Mean squared error over all entries plus exact parameter gradients.
    // Requires training mode. Throws TrainingError naming the first layer
    // that produced a non-finite activation.
    T param_gradients(const Matrix<T>& x, const Matrix<T>& targets, Gradients<T>& grads);

    // Gradient of sum((net(x) - target)^2) with respect to x, inference mode,
    // parameters untouched. Single-sample convenience used by the tests.
    std::vector<T> input_gradients(const std::vector<T>& x, const std::vector<T>& target) const;

    // Building blocks for custom losses through a frozen network: a cached
    // inference forward followed by backpropagation of an arbitrary output
    // gradient to the input.
    void forward_inference_cached(const Matrix<T>& x, ForwardCache<T>& cache) const;
    Matrix<T> backward_input(const ForwardCache<T>& cache, const Matrix<T>& grad_out) const;

    // Cached training forward + backward, the training-loop fast path.
    void forward_train_cached(const Matrix<T>& x, ForwardCache<T>& cache);
    void backward_params(const ForwardCache<T>& cache, const Matrix<T>& grad_out,
                         Gradients<T>& grads) const;

    Gradients<T> make_gradients() const;

    // Trainable tensors in fixed declaration order (weights/biases, then batch
    // norm scale/shift per layer). Running statistics are not trainable.
    struct TensorRef {
        T* data;
        std::size_t size;
    };
    std::vector<TensorRef> trainable_tensors();
    std::vector<TensorRef> gradient_tensors(Gradients<T>& grads) const;
    std::size_t trainable_size() const;

    // Serialization hooks (checkpoint format lives in checkpoint.hpp).
    const Matrix<T>& weight(std::size_t l) const { return weights_[l]; }
    Matrix<T>& weight(std::size_t l) { return weights_[l]; }
    const std::vector<T>& bias(std::size_t l) const { return biases_[l]; }
    std::vector<T>& bias(std::size_t l) { return biases_[l]; }
    std::vector<T>& bn_scale(std::size_t l) { return bn_scale_[l]; }
    std::vector<T>& bn_shift(std::size_t l) { return bn_shift_[l]; }
    std::vector<T>& bn_running_mean(std::size_t l) { return bn_running_mean_[l]; }
    std::vector<T>& bn_running_var(std::size_t l) { return bn_running_var_[l]; }
    const std::vector<T>& bn_scale(std::size_t l) const { return bn_scale_[l]; }
    const std::vector<T>& bn_shift(std::size_t l) const { return bn_shift_[l]; }
    const std::vector<T>& bn_running_mean(std::size_t l) const { return bn_running_mean_[l]; }
    const std::vector<T>& bn_running_var(std::size_t l) const { return bn_running_var_[l]; }

    static constexpr T kBnEps = T(1e-5);
    static constexpr T kBnMomentum = T(0.1);

private:
    bool is_hidden(std::size_t l) const { return l + 1 < weights_.size(); }
    void check_input(const Matrix<T>& x) const;
    void forward_impl(const Matrix<T>& x, ForwardCache<T>& cache, bool training,
                      bool keep_inputs);

    NetworkSpec spec_;
    Mode mode_ = Mode::Inference;
    std::vector<Matrix<T>> weights_;
    std::vector<std::vector<T>> biases_;
    std::vector<std::vector<T>> bn_scale_, bn_shift_;
    std::vector<std::vector<T>> bn_running_mean_, bn_running_var_;
};

using Networkf = Network<float>;
using Networkd = Network<double>;

}  // namespace mmn
