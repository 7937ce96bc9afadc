#include "mmn/network.hpp"

#include <cmath>
#include <string>

#include "mmn/errors.hpp"
#include "mmn/kernels.hpp"
#include "mmn/rng.hpp"

namespace mmn {

void NetworkSpec::validate() const {
    if (input_dim <= 0 || output_dim <= 0)
        throw ConfigError("NetworkSpec: input_dim and output_dim must be positive");
    for (int h : hidden_layers)
        if (h <= 0) throw ConfigError("NetworkSpec: hidden layer widths must be positive");
}

template <typename T>
Network<T>::Network(NetworkSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
    spec_.validate();
    std::vector<int> dims;
    dims.push_back(spec_.input_dim);
    dims.insert(dims.end(), spec_.hidden_layers.begin(), spec_.hidden_layers.end());
    dims.push_back(spec_.output_dim);

    Rng rng(derive_seed(init_seed, 0x17));
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        Matrix<T> w(fan_out, fan_in);
        // Fan-in scaled Gaussian init (variance 2/fan_in), suited to
        // rectified-linear layers.
        const double stddev = std::sqrt(2.0 / fan_in);
        for (std::size_t i = 0; i < w.size(); ++i)
            w.data()[i] = static_cast<T>(stddev * rng.gaussian());
        weights_.push_back(std::move(w));
        biases_.emplace_back(fan_out, T(0));
    }
    if (spec_.use_batch_norm) {
        for (int h : spec_.hidden_layers) {
            bn_scale_.emplace_back(h, T(1));
            bn_shift_.emplace_back(h, T(0));
            bn_running_mean_.emplace_back(h, T(0));
            bn_running_var_.emplace_back(h, T(1));
        }
    }
}

template <typename T>
void Network<T>::check_input(const Matrix<T>& x) const {
    if (x.cols() != static_cast<std::size_t>(spec_.input_dim))
        throw ConfigError("forward: batch has " + std::to_string(x.cols()) +
                          " columns, expected " + std::to_string(spec_.input_dim));
}

template <typename T>
void Network<T>::forward_impl(const Matrix<T>& x, ForwardCache<T>& cache, bool training,
                              bool keep_inputs) {
    check_input(x);
    cache.layers.resize(weights_.size());
    Matrix<T> h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        auto& lc = cache.layers[l];
        if (keep_inputs) lc.input = h;
        Matrix<T> z(h.rows(), weights_[l].rows());
        kernels::linear_forward(h, weights_[l], biases_[l], z);
        if (!is_hidden(l)) {
            cache.output = std::move(z);
            return;
        }
        if (spec_.use_batch_norm) {
            lc.linear_out = std::move(z);
            const std::size_t width = weights_[l].rows();
            Matrix<T> bn_out(h.rows(), width);
            if (training) {
                lc.bn_xhat = Matrix<T>(h.rows(), width);
                lc.bn_var.assign(width, T(0));
                std::vector<T> mean(width, T(0));
                kernels::bn_forward_train(lc.linear_out, bn_scale_[l], bn_shift_[l], kBnEps,
                                          lc.bn_xhat, bn_out, mean, lc.bn_var);
                for (std::size_t f = 0; f < width; ++f) {
                    bn_running_mean_[l][f] =
                        (T(1) - kBnMomentum) * bn_running_mean_[l][f] + kBnMomentum * mean[f];
                    bn_running_var_[l][f] =
                        (T(1) - kBnMomentum) * bn_running_var_[l][f] + kBnMomentum * lc.bn_var[f];
                }
            } else {
                kernels::bn_forward_infer(lc.linear_out, bn_scale_[l], bn_shift_[l],
                                          bn_running_mean_[l], bn_running_var_[l], kBnEps, bn_out);
            }
            lc.act_in = std::move(bn_out);
        } else {
            lc.act_in = std::move(z);
        }
        Matrix<T> activated(lc.act_in.rows(), lc.act_in.cols());
        kernels::relu_forward(lc.act_in, activated);
        h = std::move(activated);
    }
}

template <typename T>
Matrix<T> Network<T>::forward(const Matrix<T>& x) {
    ForwardCache<T> cache;
    forward_impl(x, cache, mode_ == Mode::Training, false);
    return std::move(cache.output);
}

template <typename T>
Matrix<T> Network<T>::forward_inference(const Matrix<T>& x) const {
    ForwardCache<T> cache;
    // forward_impl only mutates state on the training path.
    const_cast<Network<T>*>(this)->forward_impl(x, cache, false, false);
    return std::move(cache.output);
}

template <typename T>
void Network<T>::forward_inference_cached(const Matrix<T>& x, ForwardCache<T>& cache) const {
    const_cast<Network<T>*>(this)->forward_impl(x, cache, false, false);
}

template <typename T>
void Network<T>::forward_train_cached(const Matrix<T>& x, ForwardCache<T>& cache) {
    forward_impl(x, cache, true, true);
}

template <typename T>
Gradients<T> Network<T>::make_gradients() const {
    Gradients<T> g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        g.weight.emplace_back(weights_[l].rows(), weights_[l].cols());
        g.bias.emplace_back(biases_[l].size(), T(0));
    }
    for (std::size_t l = 0; l < bn_scale_.size(); ++l) {
        g.bn_scale.emplace_back(bn_scale_[l].size(), T(0));
        g.bn_shift.emplace_back(bn_shift_[l].size(), T(0));
    }
    return g;
}

template <typename T>
void Network<T>::backward_params(const ForwardCache<T>& cache, const Matrix<T>& grad_out,
                                 Gradients<T>& grads) const {
    Matrix<T> g = grad_out;
    for (std::size_t li = weights_.size(); li-- > 0;) {
        const auto& lc = cache.layers[li];
        if (is_hidden(li)) {
            Matrix<T> g_pre(g.rows(), g.cols());
            kernels::relu_backward(lc.act_in, g, g_pre);
            if (spec_.use_batch_norm) {
                Matrix<T> g_bn(g.rows(), g.cols());
                kernels::bn_backward_train(lc.bn_xhat, g_pre, bn_scale_[li], lc.bn_var, kBnEps,
                                           g_bn, grads.bn_scale[li], grads.bn_shift[li]);
                g = std::move(g_bn);
            } else {
                g = std::move(g_pre);
            }
        }
        kernels::linear_grad_params(lc.input, g, grads.weight[li], grads.bias[li]);
        if (li > 0) {
            Matrix<T> g_in(g.rows(), weights_[li].cols());
            kernels::linear_backward_input(g, weights_[li], g_in);
            g = std::move(g_in);
        }
    }
}

namespace {
template <typename T>
bool all_finite(const Matrix<T>& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!std::isfinite(static_cast<double>(m.data()[i]))) return false;
    return true;
}
}  // namespace

template <typename T>
T Network<T>::param_gradients(const Matrix<T>& x, const Matrix<T>& targets, Gradients<T>& grads) {
    if (mode_ != Mode::Training)
        throw ConfigError("param_gradients requires training mode");
    if (x.rows() != targets.rows())
        throw ConfigError("param_gradients: batch and target row counts differ");
    if (targets.cols() != static_cast<std::size_t>(spec_.output_dim))
        throw ConfigError("param_gradients: target column count mismatch");

    ForwardCache<T> cache;
    forward_train_cached(x, cache);

    const std::size_t n = cache.output.size();
    T loss = T(0);
    Matrix<T> grad_out(cache.output.rows(), cache.output.cols());
    const T scale = T(2) / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T d = cache.output.data()[i] - targets.data()[i];
        loss += d * d;
        grad_out.data()[i] = scale * d;
    }
    loss /= static_cast<T>(n);

    if (!std::isfinite(static_cast<double>(loss))) {
        for (std::size_t l = 0; l < cache.layers.size(); ++l) {
            const auto& lc = cache.layers[l];
            if (!lc.linear_out.empty() && !all_finite(lc.linear_out))
                throw TrainingError("numeric overflow in forward pass at layer " +
                                    std::to_string(l));
            if (!lc.act_in.empty() && !all_finite(lc.act_in))
                throw TrainingError("numeric overflow in forward pass at layer " +
                                    std::to_string(l));
        }
        if (!all_finite(cache.output))
            throw TrainingError("numeric overflow in forward pass at layer " +
                                std::to_string(cache.layers.size() - 1));
        throw TrainingError("numeric overflow: non-finite loss");
    }

    backward_params(cache, grad_out, grads);
    return loss;
}

template <typename T>
Matrix<T> Network<T>::backward_input(const ForwardCache<T>& cache, const Matrix<T>& grad_out) const {
    Matrix<T> g = grad_out;
    for (std::size_t li = weights_.size(); li-- > 0;) {
        const auto& lc = cache.layers[li];
        if (is_hidden(li)) {
            Matrix<T> g_pre(g.rows(), g.cols());
            kernels::relu_backward(lc.act_in, g, g_pre);
            if (spec_.use_batch_norm) {
                Matrix<T> g_bn(g.rows(), g.cols());
                kernels::bn_backward_infer(g_pre, bn_scale_[li], bn_running_var_[li], kBnEps, g_bn);
                g = std::move(g_bn);
            } else {
                g = std::move(g_pre);
            }
        }
        Matrix<T> g_in(g.rows(), weights_[li].cols());
        kernels::linear_backward_input(g, weights_[li], g_in);
        g = std::move(g_in);
    }
    return g;
}

template <typename T>
std::vector<T> Network<T>::input_gradients(const std::vector<T>& x,
                                           const std::vector<T>& target) const {
    if (mode_ != Mode::Inference)
        throw ConfigError("input_gradients requires inference mode");
    Matrix<T> xm = Matrix<T>::from_rows(1, x.size(), x);
    ForwardCache<T> cache;
    forward_inference_cached(xm, cache);
    if (cache.output.cols() != target.size())
        throw ConfigError("input_gradients: target dimension mismatch");
    Matrix<T> grad_out(1, target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const T d = cache.output.data()[i] - target[i];
        if (!std::isfinite(static_cast<double>(d)))
            throw TrainingError("numeric overflow in forward pass");
        grad_out.data()[i] = T(2) * d;
    }
    Matrix<T> gin = backward_input(cache, grad_out);
    return std::vector<T>(gin.data(), gin.data() + gin.size());
}

template <typename T>
std::vector<typename Network<T>::TensorRef> Network<T>::trainable_tensors() {
    std::vector<TensorRef> refs;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        refs.push_back({weights_[l].data(), weights_[l].size()});
        refs.push_back({biases_[l].data(), biases_[l].size()});
    }
    for (std::size_t l = 0; l < bn_scale_.size(); ++l) {
        refs.push_back({bn_scale_[l].data(), bn_scale_[l].size()});
        refs.push_back({bn_shift_[l].data(), bn_shift_[l].size()});
    }
    return refs;
}

template <typename T>
std::vector<typename Network<T>::TensorRef> Network<T>::gradient_tensors(Gradients<T>& grads) const {
    std::vector<TensorRef> refs;
    for (std::size_t l = 0; l < grads.weight.size(); ++l) {
        refs.push_back({grads.weight[l].data(), grads.weight[l].size()});
        refs.push_back({grads.bias[l].data(), grads.bias[l].size()});
    }
    for (std::size_t l = 0; l < grads.bn_scale.size(); ++l) {
        refs.push_back({grads.bn_scale[l].data(), grads.bn_scale[l].size()});
        refs.push_back({grads.bn_shift[l].data(), grads.bn_shift[l].size()});
    }
    return refs;
}

template <typename T>
std::size_t Network<T>::trainable_size() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        n += weights_[l].size() + biases_[l].size();
    for (std::size_t l = 0; l < bn_scale_.size(); ++l)
        n += bn_scale_[l].size() + bn_shift_[l].size();
    return n;
}

template class Network<float>;
template class Network<double>;

}  // namespace mmn
