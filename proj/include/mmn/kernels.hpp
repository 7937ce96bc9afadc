#pragma once

#include <cmath>
#include <cstddef>

#include "mmn/tensor.hpp"

// Data-parallel kernels behind the network engine. Every kernel exists in a
// serial reference version and an OpenMP version; both call the same inlined
// inner loops, so for a given input they produce bit-identical outputs no
// matter the thread count. Tests compare the two directly, and the bench
// target measures the speedup.

namespace mmn::kernels {

enum class ExecMode { Serial, Parallel };

// Process-wide kernel dispatch mode. Parallel by default when OpenMP is
// compiled in; the serial reference stays available for tests and benchmarks.
ExecMode exec_mode();
void set_exec_mode(ExecMode mode);

namespace detail {

// Reductions use a fixed bank of accumulator lanes so the summation order is
// defined by the source (vectorizable without reassociation); results are
// identical between the serial and OpenMP variants and across runs.
template <typename T>
inline T dot(const T* __restrict a, const T* __restrict b, std::size_t n) {
    constexpr std::size_t lanes = 64 / sizeof(T);
    T acc[lanes] = {};
    std::size_t i = 0;
    for (; i + lanes <= n; i += lanes)
        for (std::size_t j = 0; j < lanes; ++j) acc[j] += a[i + j] * b[i + j];
    T tail = T(0);
    for (; i < n; ++i) tail += a[i] * b[i];
    for (std::size_t j = 0; j < lanes; ++j) tail += acc[j];
    return tail;
}

template <typename T>
inline void axpy(T alpha, const T* __restrict x, T* __restrict y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
inline void linear_forward_row(const T* x, const Matrix<T>& w, const T* bias, T* out) {
    const std::size_t in = w.cols(), on = w.rows();
    for (std::size_t o = 0; o < on; ++o) out[o] = bias[o] + dot(x, w.row(o), in);
}

template <typename T>
inline void linear_backward_input_row(const T* gout, const Matrix<T>& w, T* gin) {
    const std::size_t in = w.cols(), on = w.rows();
    for (std::size_t i = 0; i < in; ++i) gin[i] = T(0);
    for (std::size_t o = 0; o < on; ++o) axpy(gout[o], w.row(o), gin, in);
}

// Gradient of one weight row: gw[o][:] = sum_b gout[b][o] * x[b][:].
// The batch loop is innermost-fixed so accumulation order never depends on
// the parallel schedule.
template <typename T>
inline void weight_grad_row(const Matrix<T>& x, const Matrix<T>& gout, std::size_t o,
                            T* gw_row, T& gb) {
    const std::size_t batch = x.rows(), in = x.cols();
    for (std::size_t i = 0; i < in; ++i) gw_row[i] = T(0);
    T acc = T(0);
    for (std::size_t b = 0; b < batch; ++b) {
        const T g = gout(b, o);
        acc += g;
        axpy(g, x.row(b), gw_row, in);
    }
    gb = acc;
}

template <typename T>
inline void relu_forward_row(const T* x, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

// Subgradient at 0 is 0.
template <typename T>
inline void relu_backward_row(const T* pre, const T* gout, T* gin, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gin[i] = pre[i] > T(0) ? gout[i] : T(0);
}

template <typename T>
inline void bn_feature_stats(const Matrix<T>& x, std::size_t f, T& mean, T& var) {
    const std::size_t batch = x.rows(), cols = x.cols();
    T sum = T(0);
    for (std::size_t b = 0; b < batch; ++b) sum += x.data()[b * cols + f];
    mean = sum / static_cast<T>(batch);
    T sq = T(0);
    for (std::size_t b = 0; b < batch; ++b) {
        const T d = x.data()[b * cols + f] - mean;
        sq += d * d;
    }
    var = sq / static_cast<T>(batch);
}

template <typename T>
inline void bn_normalize_feature(const Matrix<T>& x, std::size_t f, T mean, T inv_std,
                                 T scale, T shift, Matrix<T>& xhat, Matrix<T>& out) {
    const std::size_t batch = x.rows(), cols = x.cols();
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t idx = b * cols + f;
        const T h = (x.data()[idx] - mean) * inv_std;
        xhat.data()[idx] = h;
        out.data()[idx] = scale * h + shift;
    }
}

template <typename T>
inline void bn_backward_train_feature(const Matrix<T>& xhat, const Matrix<T>& gout,
                                      std::size_t f, T scale, T inv_std, Matrix<T>& gin,
                                      T& gscale, T& gshift) {
    const std::size_t batch = xhat.rows(), cols = xhat.cols();
    T sum_g = T(0), sum_gh = T(0);
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t idx = b * cols + f;
        sum_g += gout.data()[idx];
        sum_gh += gout.data()[idx] * xhat.data()[idx];
    }
    gscale = sum_gh;
    gshift = sum_g;
    const T n = static_cast<T>(batch);
    const T k = scale * inv_std / n;
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t idx = b * cols + f;
        gin.data()[idx] = k * (n * gout.data()[idx] - sum_g - xhat.data()[idx] * sum_gh);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dense layer. Weights are (out_features x in_features), row-major.
// ---------------------------------------------------------------------------

// out(B,O) = x(B,I) . w^T + bias
template <typename T>
void linear_forward(const Matrix<T>& x, const Matrix<T>& w, const std::vector<T>& bias,
                    Matrix<T>& out);

// gin(B,I) = gout(B,O) . w
template <typename T>
void linear_backward_input(const Matrix<T>& gout, const Matrix<T>& w, Matrix<T>& gin);

// gw(O,I) = gout^T . x ; gb(O) = column sums of gout
template <typename T>
void linear_grad_params(const Matrix<T>& x, const Matrix<T>& gout, Matrix<T>& gw,
                        std::vector<T>& gb);

// ---------------------------------------------------------------------------
// Rectified-linear activation.
// ---------------------------------------------------------------------------

template <typename T>
void relu_forward(const Matrix<T>& x, Matrix<T>& out);

template <typename T>
void relu_backward(const Matrix<T>& pre, const Matrix<T>& gout, Matrix<T>& gin);

// ---------------------------------------------------------------------------
// Batch normalization over features (columns). Biased batch variance is used
// both for normalization and for the running-variance update.
// ---------------------------------------------------------------------------

template <typename T>
void bn_forward_train(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, T eps, Matrix<T>& xhat, Matrix<T>& out,
                      std::vector<T>& batch_mean, std::vector<T>& batch_var);

template <typename T>
void bn_forward_infer(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, const std::vector<T>& running_mean,
                      const std::vector<T>& running_var, T eps, Matrix<T>& out);

template <typename T>
void bn_backward_train(const Matrix<T>& xhat, const Matrix<T>& gout,
                       const std::vector<T>& scale, const std::vector<T>& batch_var, T eps,
                       Matrix<T>& gin, std::vector<T>& gscale, std::vector<T>& gshift);

// Inference-mode gradient, used when differentiating through a frozen network:
// gin = gout * scale / sqrt(running_var + eps).
template <typename T>
void bn_backward_infer(const Matrix<T>& gout, const std::vector<T>& scale,
                       const std::vector<T>& running_var, T eps, Matrix<T>& gin);

// ---------------------------------------------------------------------------
// Adam update on a flat parameter array, standard bias correction.
// `step` is the already-incremented step counter (1 on the first call).
// ---------------------------------------------------------------------------

template <typename T>
void adam_update(T* params, const T* grads, T* m, T* v, std::size_t n, T lr, T beta1, T beta2,
                 T eps, long step);

// Serial reference implementations, exposed for the equivalence tests and the
// benchmark. The unsuffixed entry points dispatch on exec_mode().
namespace serial {
template <typename T>
void linear_forward(const Matrix<T>& x, const Matrix<T>& w, const std::vector<T>& bias,
                    Matrix<T>& out);
template <typename T>
void linear_backward_input(const Matrix<T>& gout, const Matrix<T>& w, Matrix<T>& gin);
template <typename T>
void linear_grad_params(const Matrix<T>& x, const Matrix<T>& gout, Matrix<T>& gw,
                        std::vector<T>& gb);
template <typename T>
void relu_forward(const Matrix<T>& x, Matrix<T>& out);
template <typename T>
void relu_backward(const Matrix<T>& pre, const Matrix<T>& gout, Matrix<T>& gin);
template <typename T>
void bn_forward_train(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, T eps, Matrix<T>& xhat, Matrix<T>& out,
                      std::vector<T>& batch_mean, std::vector<T>& batch_var);
template <typename T>
void bn_forward_infer(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, const std::vector<T>& running_mean,
                      const std::vector<T>& running_var, T eps, Matrix<T>& out);
template <typename T>
void bn_backward_train(const Matrix<T>& xhat, const Matrix<T>& gout,
                       const std::vector<T>& scale, const std::vector<T>& batch_var, T eps,
                       Matrix<T>& gin, std::vector<T>& gscale, std::vector<T>& gshift);
template <typename T>
void bn_backward_infer(const Matrix<T>& gout, const std::vector<T>& scale,
                       const std::vector<T>& running_var, T eps, Matrix<T>& gin);
template <typename T>
void adam_update(T* params, const T* grads, T* m, T* v, std::size_t n, T lr, T beta1, T beta2,
                 T eps, long step);
}  // namespace serial

namespace omp {
template <typename T>
void linear_forward(const Matrix<T>& x, const Matrix<T>& w, const std::vector<T>& bias,
                    Matrix<T>& out);
template <typename T>
void linear_backward_input(const Matrix<T>& gout, const Matrix<T>& w, Matrix<T>& gin);
template <typename T>
void linear_grad_params(const Matrix<T>& x, const Matrix<T>& gout, Matrix<T>& gw,
                        std::vector<T>& gb);
template <typename T>
void relu_forward(const Matrix<T>& x, Matrix<T>& out);
template <typename T>
void relu_backward(const Matrix<T>& pre, const Matrix<T>& gout, Matrix<T>& gin);
template <typename T>
void bn_forward_train(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, T eps, Matrix<T>& xhat, Matrix<T>& out,
                      std::vector<T>& batch_mean, std::vector<T>& batch_var);
template <typename T>
void bn_forward_infer(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, const std::vector<T>& running_mean,
                      const std::vector<T>& running_var, T eps, Matrix<T>& out);
template <typename T>
void bn_backward_train(const Matrix<T>& xhat, const Matrix<T>& gout,
                       const std::vector<T>& scale, const std::vector<T>& batch_var, T eps,
                       Matrix<T>& gin, std::vector<T>& gscale, std::vector<T>& gshift);
template <typename T>
void bn_backward_infer(const Matrix<T>& gout, const std::vector<T>& scale,
                       const std::vector<T>& running_var, T eps, Matrix<T>& gin);
template <typename T>
void adam_update(T* params, const T* grads, T* m, T* v, std::size_t n, T lr, T beta1, T beta2,
                 T eps, long step);
}  // namespace omp

}  // namespace mmn::kernels
