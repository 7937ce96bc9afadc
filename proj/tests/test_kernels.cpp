#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmn/kernels.hpp"
#include "mmn/rng.hpp"

using namespace mmn;

namespace {

Matrixf random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrixf m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<float>(scale * rng.gaussian());
    return m;
}

std::vector<float> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(scale * rng.gaussian());
    return v;
}

}  // namespace

// The OpenMP kernels must be bit-identical to the serial reference for any
// shape: parallelization never reorders an accumulation.
TEST_CASE("parallel kernels match the serial reference bitwise") {
    Rng rng(2024);
    const std::size_t shapes[][3] = {
        {1, 3, 5}, {7, 16, 4}, {33, 8, 8}, {128, 64, 32}, {257, 31, 17},
    };
    for (const auto& s : shapes) {
        const std::size_t batch = s[0], in = s[1], out = s[2];
        const Matrixf x = random_matrix(batch, in, rng);
        const Matrixf w = random_matrix(out, in, rng);
        const auto bias = random_vec(out, rng);

        Matrixf fwd_a(batch, out), fwd_b(batch, out);
        kernels::serial::linear_forward(x, w, bias, fwd_a);
        kernels::omp::linear_forward(x, w, bias, fwd_b);
        CHECK(fwd_a == fwd_b);

        const Matrixf gout = random_matrix(batch, out, rng);
        Matrixf gin_a(batch, in), gin_b(batch, in);
        kernels::serial::linear_backward_input(gout, w, gin_a);
        kernels::omp::linear_backward_input(gout, w, gin_b);
        CHECK(gin_a == gin_b);

        Matrixf gw_a(out, in), gw_b(out, in);
        std::vector<float> gb_a(out), gb_b(out);
        kernels::serial::linear_grad_params(x, gout, gw_a, gb_a);
        kernels::omp::linear_grad_params(x, gout, gw_b, gb_b);
        CHECK(gw_a == gw_b);
        CHECK(gb_a == gb_b);

        Matrixf relu_a(batch, in), relu_b(batch, in);
        kernels::serial::relu_forward(x, relu_a);
        kernels::omp::relu_forward(x, relu_b);
        CHECK(relu_a == relu_b);

        // Batch norm, train and infer paths.
        const auto scale = random_vec(in, rng);
        const auto shift = random_vec(in, rng);
        Matrixf xhat_a(batch, in), out_a(batch, in), xhat_b(batch, in), out_b(batch, in);
        std::vector<float> mean_a(in), var_a(in), mean_b(in), var_b(in);
        kernels::serial::bn_forward_train(x, scale, shift, 1e-5f, xhat_a, out_a, mean_a, var_a);
        kernels::omp::bn_forward_train(x, scale, shift, 1e-5f, xhat_b, out_b, mean_b, var_b);
        CHECK(xhat_a == xhat_b);
        CHECK(out_a == out_b);
        CHECK(mean_a == mean_b);
        CHECK(var_a == var_b);

        const Matrixf gbn = random_matrix(batch, in, rng);
        Matrixf gin2_a(batch, in), gin2_b(batch, in);
        std::vector<float> gs_a(in), gs_b(in), gh_a(in), gh_b(in);
        kernels::serial::bn_backward_train(xhat_a, gbn, scale, var_a, 1e-5f, gin2_a, gs_a, gh_a);
        kernels::omp::bn_backward_train(xhat_b, gbn, scale, var_b, 1e-5f, gin2_b, gs_b, gh_b);
        CHECK(gin2_a == gin2_b);
        CHECK(gs_a == gs_b);
        CHECK(gh_a == gh_b);

        // Adam.
        auto p_a = random_vec(in * out, rng);
        auto p_b = p_a;
        const auto g = random_vec(in * out, rng);
        std::vector<float> m_a(p_a.size(), 0), v_a(p_a.size(), 0), m_b(p_a.size(), 0),
            v_b(p_a.size(), 0);
        for (long step = 1; step <= 3; ++step) {
            kernels::serial::adam_update(p_a.data(), g.data(), m_a.data(), v_a.data(), p_a.size(),
                                         1e-3f, 0.9f, 0.999f, 1e-8f, step);
            kernels::omp::adam_update(p_b.data(), g.data(), m_b.data(), v_b.data(), p_b.size(),
                                      1e-3f, 0.9f, 0.999f, 1e-8f, step);
        }
        CHECK(p_a == p_b);
    }
}

TEST_CASE("dispatch honors the exec mode switch") {
    const auto previous = kernels::exec_mode();
    Rng rng(7);
    const Matrixf x = random_matrix(5, 4, rng);
    const Matrixf w = random_matrix(3, 4, rng);
    const auto bias = random_vec(3, rng);

    Matrixf out_serial(5, 3), out_parallel(5, 3);
    kernels::set_exec_mode(kernels::ExecMode::Serial);
    kernels::linear_forward(x, w, bias, out_serial);
    kernels::set_exec_mode(kernels::ExecMode::Parallel);
    kernels::linear_forward(x, w, bias, out_parallel);
    kernels::set_exec_mode(previous);

    CHECK(out_serial == out_parallel);
}
