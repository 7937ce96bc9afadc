#include "mmn/kernels.hpp"

#include <atomic>

namespace mmn::kernels {

namespace {
std::atomic<ExecMode> g_mode{
#ifdef _OPENMP
    ExecMode::Parallel
#else
    ExecMode::Serial
#endif
};
}  // namespace

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }
void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }

// ---------------------------------------------------------------------------
// Serial reference
// ---------------------------------------------------------------------------

namespace serial {

template <typename T>
void linear_forward(const Matrix<T>& x, const Matrix<T>& w, const std::vector<T>& bias,
                    Matrix<T>& out) {
    const std::size_t batch = x.rows();
    for (std::size_t b = 0; b < batch; ++b)
        detail::linear_forward_row(x.row(b), w, bias.data(), out.row(b));
}

template <typename T>
void linear_backward_input(const Matrix<T>& gout, const Matrix<T>& w, Matrix<T>& gin) {
    const std::size_t batch = gout.rows();
    for (std::size_t b = 0; b < batch; ++b)
        detail::linear_backward_input_row(gout.row(b), w, gin.row(b));
}

template <typename T>
void linear_grad_params(const Matrix<T>& x, const Matrix<T>& gout, Matrix<T>& gw,
                        std::vector<T>& gb) {
    const std::size_t on = gw.rows();
    for (std::size_t o = 0; o < on; ++o)
        detail::weight_grad_row(x, gout, o, gw.row(o), gb[o]);
}

template <typename T>
void relu_forward(const Matrix<T>& x, Matrix<T>& out) {
    const std::size_t batch = x.rows();
    for (std::size_t b = 0; b < batch; ++b)
        detail::relu_forward_row(x.row(b), out.row(b), x.cols());
}

template <typename T>
void relu_backward(const Matrix<T>& pre, const Matrix<T>& gout, Matrix<T>& gin) {
    const std::size_t batch = pre.rows();
    for (std::size_t b = 0; b < batch; ++b)
        detail::relu_backward_row(pre.row(b), gout.row(b), gin.row(b), pre.cols());
}

template <typename T>
void bn_forward_train(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, T eps, Matrix<T>& xhat, Matrix<T>& out,
                      std::vector<T>& batch_mean, std::vector<T>& batch_var) {
    const std::size_t features = x.cols();
    for (std::size_t f = 0; f < features; ++f) {
        detail::bn_feature_stats(x, f, batch_mean[f], batch_var[f]);
        const T inv_std = T(1) / std::sqrt(batch_var[f] + eps);
        detail::bn_normalize_feature(x, f, batch_mean[f], inv_std, scale[f], shift[f], xhat, out);
    }
}

template <typename T>
void bn_forward_infer(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, const std::vector<T>& running_mean,
                      const std::vector<T>& running_var, T eps, Matrix<T>& out) {
    const std::size_t features = x.cols();
    for (std::size_t f = 0; f < features; ++f) {
        const T inv_std = T(1) / std::sqrt(running_var[f] + eps);
        for (std::size_t b = 0; b < x.rows(); ++b)
            out(b, f) = scale[f] * ((x(b, f) - running_mean[f]) * inv_std) + shift[f];
    }
}

template <typename T>
void bn_backward_train(const Matrix<T>& xhat, const Matrix<T>& gout,
                       const std::vector<T>& scale, const std::vector<T>& batch_var, T eps,
                       Matrix<T>& gin, std::vector<T>& gscale, std::vector<T>& gshift) {
    const std::size_t features = xhat.cols();
    for (std::size_t f = 0; f < features; ++f) {
        const T inv_std = T(1) / std::sqrt(batch_var[f] + eps);
        detail::bn_backward_train_feature(xhat, gout, f, scale[f], inv_std, gin, gscale[f],
                                          gshift[f]);
    }
}

template <typename T>
void bn_backward_infer(const Matrix<T>& gout, const std::vector<T>& scale,
                       const std::vector<T>& running_var, T eps, Matrix<T>& gin) {
    const std::size_t features = gout.cols();
    for (std::size_t f = 0; f < features; ++f) {
        const T k = scale[f] / std::sqrt(running_var[f] + eps);
        for (std::size_t b = 0; b < gout.rows(); ++b) gin(b, f) = gout(b, f) * k;
    }
}

template <typename T>
void adam_update(T* params, const T* grads, T* m, T* v, std::size_t n, T lr, T beta1, T beta2,
                 T eps, long step) {
    const T bc1 = T(1) - std::pow(beta1, static_cast<T>(step));
    const T bc2 = T(1) - std::pow(beta2, static_cast<T>(step));
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * grads[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * grads[i] * grads[i];
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP variants. Parallel loops are arranged so each output element is
// written by exactly one thread with the same inner accumulation order as the
// serial reference; results are bit-identical for any thread count.
// ---------------------------------------------------------------------------

namespace omp {

template <typename T>
void linear_forward(const Matrix<T>& x, const Matrix<T>& w, const std::vector<T>& bias,
                    Matrix<T>& out) {
    const long batch = static_cast<long>(x.rows());
#pragma omp parallel for schedule(static)
    for (long b = 0; b < batch; ++b)
        detail::linear_forward_row(x.row(b), w, bias.data(), out.row(b));
}

template <typename T>
void linear_backward_input(const Matrix<T>& gout, const Matrix<T>& w, Matrix<T>& gin) {
    const long batch = static_cast<long>(gout.rows());
#pragma omp parallel for schedule(static)
    for (long b = 0; b < batch; ++b)
        detail::linear_backward_input_row(gout.row(b), w, gin.row(b));
}

template <typename T>
void linear_grad_params(const Matrix<T>& x, const Matrix<T>& gout, Matrix<T>& gw,
                        std::vector<T>& gb) {
    const long on = static_cast<long>(gw.rows());
#pragma omp parallel for schedule(static)
    for (long o = 0; o < on; ++o)
        detail::weight_grad_row(x, gout, static_cast<std::size_t>(o), gw.row(o), gb[o]);
}

template <typename T>
void relu_forward(const Matrix<T>& x, Matrix<T>& out) {
    const long batch = static_cast<long>(x.rows());
#pragma omp parallel for schedule(static)
    for (long b = 0; b < batch; ++b)
        detail::relu_forward_row(x.row(b), out.row(b), x.cols());
}

template <typename T>
void relu_backward(const Matrix<T>& pre, const Matrix<T>& gout, Matrix<T>& gin) {
    const long batch = static_cast<long>(pre.rows());
#pragma omp parallel for schedule(static)
    for (long b = 0; b < batch; ++b)
        detail::relu_backward_row(pre.row(b), gout.row(b), gin.row(b), pre.cols());
}

template <typename T>
void bn_forward_train(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, T eps, Matrix<T>& xhat, Matrix<T>& out,
                      std::vector<T>& batch_mean, std::vector<T>& batch_var) {
    const long features = static_cast<long>(x.cols());
#pragma omp parallel for schedule(static)
    for (long f = 0; f < features; ++f) {
        detail::bn_feature_stats(x, f, batch_mean[f], batch_var[f]);
        const T inv_std = T(1) / std::sqrt(batch_var[f] + eps);
        detail::bn_normalize_feature(x, static_cast<std::size_t>(f), batch_mean[f], inv_std,
                                     scale[f], shift[f], xhat, out);
    }
}

template <typename T>
void bn_forward_infer(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, const std::vector<T>& running_mean,
                      const std::vector<T>& running_var, T eps, Matrix<T>& out) {
    const long features = static_cast<long>(x.cols());
#pragma omp parallel for schedule(static)
    for (long f = 0; f < features; ++f) {
        const T inv_std = T(1) / std::sqrt(running_var[f] + eps);
        for (std::size_t b = 0; b < x.rows(); ++b)
            out(b, f) = scale[f] * ((x(b, f) - running_mean[f]) * inv_std) + shift[f];
    }
}

template <typename T>
void bn_backward_train(const Matrix<T>& xhat, const Matrix<T>& gout,
                       const std::vector<T>& scale, const std::vector<T>& batch_var, T eps,
                       Matrix<T>& gin, std::vector<T>& gscale, std::vector<T>& gshift) {
    const long features = static_cast<long>(xhat.cols());
#pragma omp parallel for schedule(static)
    for (long f = 0; f < features; ++f) {
        const T inv_std = T(1) / std::sqrt(batch_var[f] + eps);
        detail::bn_backward_train_feature(xhat, gout, static_cast<std::size_t>(f), scale[f],
                                          inv_std, gin, gscale[f], gshift[f]);
    }
}

template <typename T>
void bn_backward_infer(const Matrix<T>& gout, const std::vector<T>& scale,
                       const std::vector<T>& running_var, T eps, Matrix<T>& gin) {
    const long features = static_cast<long>(gout.cols());
#pragma omp parallel for schedule(static)
    for (long f = 0; f < features; ++f) {
        const T k = scale[f] / std::sqrt(running_var[f] + eps);
        for (std::size_t b = 0; b < gout.rows(); ++b) gin(b, f) = gout(b, f) * k;
    }
}

template <typename T>
void adam_update(T* params, const T* grads, T* m, T* v, std::size_t n, T lr, T beta1, T beta2,
                 T eps, long step) {
    const T bc1 = T(1) - std::pow(beta1, static_cast<T>(step));
    const T bc2 = T(1) - std::pow(beta2, static_cast<T>(step));
    const long nn = static_cast<long>(n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < nn; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * grads[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * grads[i] * grads[i];
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace omp

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

#define MMN_DISPATCH(fn, ...)                     \
    do {                                          \
        if (exec_mode() == ExecMode::Parallel)    \
            omp::fn(__VA_ARGS__);                 \
        else                                      \
            serial::fn(__VA_ARGS__);              \
    } while (0)

template <typename T>
void linear_forward(const Matrix<T>& x, const Matrix<T>& w, const std::vector<T>& bias,
                    Matrix<T>& out) {
    MMN_DISPATCH(linear_forward, x, w, bias, out);
}

template <typename T>
void linear_backward_input(const Matrix<T>& gout, const Matrix<T>& w, Matrix<T>& gin) {
    MMN_DISPATCH(linear_backward_input, gout, w, gin);
}

template <typename T>
void linear_grad_params(const Matrix<T>& x, const Matrix<T>& gout, Matrix<T>& gw,
                        std::vector<T>& gb) {
    MMN_DISPATCH(linear_grad_params, x, gout, gw, gb);
}

template <typename T>
void relu_forward(const Matrix<T>& x, Matrix<T>& out) {
    MMN_DISPATCH(relu_forward, x, out);
}

template <typename T>
void relu_backward(const Matrix<T>& pre, const Matrix<T>& gout, Matrix<T>& gin) {
    MMN_DISPATCH(relu_backward, pre, gout, gin);
}

template <typename T>
void bn_forward_train(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, T eps, Matrix<T>& xhat, Matrix<T>& out,
                      std::vector<T>& batch_mean, std::vector<T>& batch_var) {
    MMN_DISPATCH(bn_forward_train, x, scale, shift, eps, xhat, out, batch_mean, batch_var);
}

template <typename T>
void bn_forward_infer(const Matrix<T>& x, const std::vector<T>& scale,
                      const std::vector<T>& shift, const std::vector<T>& running_mean,
                      const std::vector<T>& running_var, T eps, Matrix<T>& out) {
    MMN_DISPATCH(bn_forward_infer, x, scale, shift, running_mean, running_var, eps, out);
}

template <typename T>
void bn_backward_train(const Matrix<T>& xhat, const Matrix<T>& gout,
                       const std::vector<T>& scale, const std::vector<T>& batch_var, T eps,
                       Matrix<T>& gin, std::vector<T>& gscale, std::vector<T>& gshift) {
    MMN_DISPATCH(bn_backward_train, xhat, gout, scale, batch_var, eps, gin, gscale, gshift);
}

template <typename T>
void bn_backward_infer(const Matrix<T>& gout, const std::vector<T>& scale,
                       const std::vector<T>& running_var, T eps, Matrix<T>& gin) {
    MMN_DISPATCH(bn_backward_infer, gout, scale, running_var, eps, gin);
}

template <typename T>
void adam_update(T* params, const T* grads, T* m, T* v, std::size_t n, T lr, T beta1, T beta2,
                 T eps, long step) {
    MMN_DISPATCH(adam_update, params, grads, m, v, n, lr, beta1, beta2, eps, step);
}

#undef MMN_DISPATCH

// Explicit instantiations: float is the production precision, double backs the
// finite-difference oracle tests.
#define MMN_INSTANTIATE(T)                                                                        \
    template void linear_forward<T>(const Matrix<T>&, const Matrix<T>&, const std::vector<T>&,   \
                                    Matrix<T>&);                                                  \
    template void linear_backward_input<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);      \
    template void linear_grad_params<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&,          \
                                        std::vector<T>&);                                         \
    template void relu_forward<T>(const Matrix<T>&, Matrix<T>&);                                 \
    template void relu_backward<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);              \
    template void bn_forward_train<T>(const Matrix<T>&, const std::vector<T>&,                   \
                                      const std::vector<T>&, T, Matrix<T>&, Matrix<T>&,          \
                                      std::vector<T>&, std::vector<T>&);                          \
    template void bn_forward_infer<T>(const Matrix<T>&, const std::vector<T>&,                   \
                                      const std::vector<T>&, const std::vector<T>&,              \
                                      const std::vector<T>&, T, Matrix<T>&);                      \
    template void bn_backward_train<T>(const Matrix<T>&, const Matrix<T>&,                       \
                                       const std::vector<T>&, const std::vector<T>&, T,          \
                                       Matrix<T>&, std::vector<T>&, std::vector<T>&);             \
    template void bn_backward_infer<T>(const Matrix<T>&, const std::vector<T>&,                  \
                                       const std::vector<T>&, T, Matrix<T>&);                     \
    template void adam_update<T>(T*, const T*, T*, T*, std::size_t, T, T, T, T, long);           \
    namespace serial {                                                                            \
    template void linear_forward<T>(const Matrix<T>&, const Matrix<T>&, const std::vector<T>&,   \
                                    Matrix<T>&);                                                  \
    template void linear_backward_input<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);      \
    template void linear_grad_params<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&,          \
                                        std::vector<T>&);                                         \
    template void relu_forward<T>(const Matrix<T>&, Matrix<T>&);                                 \
    template void relu_backward<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);              \
    template void bn_forward_train<T>(const Matrix<T>&, const std::vector<T>&,                   \
                                      const std::vector<T>&, T, Matrix<T>&, Matrix<T>&,          \
                                      std::vector<T>&, std::vector<T>&);                          \
    template void bn_forward_infer<T>(const Matrix<T>&, const std::vector<T>&,                   \
                                      const std::vector<T>&, const std::vector<T>&,              \
                                      const std::vector<T>&, T, Matrix<T>&);                      \
    template void bn_backward_train<T>(const Matrix<T>&, const Matrix<T>&,                       \
                                       const std::vector<T>&, const std::vector<T>&, T,          \
                                       Matrix<T>&, std::vector<T>&, std::vector<T>&);             \
    template void bn_backward_infer<T>(const Matrix<T>&, const std::vector<T>&,                  \
                                       const std::vector<T>&, T, Matrix<T>&);                     \
    template void adam_update<T>(T*, const T*, T*, T*, std::size_t, T, T, T, T, long);           \
    }                                                                                             \
    namespace omp {                                                                               \
    template void linear_forward<T>(const Matrix<T>&, const Matrix<T>&, const std::vector<T>&,   \
                                    Matrix<T>&);                                                  \
    template void linear_backward_input<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);      \
    template void linear_grad_params<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&,          \
                                        std::vector<T>&);                                         \
    template void relu_forward<T>(const Matrix<T>&, Matrix<T>&);                                 \
    template void relu_backward<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);              \
    template void bn_forward_train<T>(const Matrix<T>&, const std::vector<T>&,                   \
                                      const std::vector<T>&, T, Matrix<T>&, Matrix<T>&,          \
                                      std::vector<T>&, std::vector<T>&);                          \
    template void bn_forward_infer<T>(const Matrix<T>&, const std::vector<T>&,                   \
                                      const std::vector<T>&, const std::vector<T>&,              \
                                      const std::vector<T>&, T, Matrix<T>&);                      \
    template void bn_backward_train<T>(const Matrix<T>&, const Matrix<T>&,                       \
                                       const std::vector<T>&, const std::vector<T>&, T,          \
                                       Matrix<T>&, std::vector<T>&, std::vector<T>&);             \
    template void bn_backward_infer<T>(const Matrix<T>&, const std::vector<T>&,                  \
                                       const std::vector<T>&, T, Matrix<T>&);                     \
    template void adam_update<T>(T*, const T*, T*, T*, std::size_t, T, T, T, T, long);           \
    }

MMN_INSTANTIATE(float)
MMN_INSTANTIATE(double)

#undef MMN_INSTANTIATE

}  // namespace mmn::kernels
