// Serial-reference vs OpenMP kernel benchmark. Shapes mirror the desk and
// paper training configurations (128- and 500-wide layers, training batches
// and full-test inference batches).
//
//   ./bench/bench_kernels [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include "mmn/kernels.hpp"
#include "mmn/network.hpp"
#include "mmn/rng.hpp"

using namespace mmn;

namespace {

Matrixf random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrixf m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<float>(rng.gaussian());
    return m;
}

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.gaussian());
    return v;
}

template <bool Parallel>
void bm_linear_forward(benchmark::State& state) {
    const std::size_t batch = state.range(0), width = state.range(1);
    const Matrixf x = random_matrix(batch, width, 1);
    const Matrixf w = random_matrix(width, width, 2);
    const auto bias = random_vec(width, 3);
    Matrixf out(batch, width);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::omp::linear_forward(x, w, bias, out);
        else
            kernels::serial::linear_forward(x, w, bias, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * batch * width * width);
}

template <bool Parallel>
void bm_linear_grad_params(benchmark::State& state) {
    const std::size_t batch = state.range(0), width = state.range(1);
    const Matrixf x = random_matrix(batch, width, 1);
    const Matrixf gout = random_matrix(batch, width, 2);
    Matrixf gw(width, width);
    std::vector<float> gb(width);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::omp::linear_grad_params(x, gout, gw, gb);
        else
            kernels::serial::linear_grad_params(x, gout, gw, gb);
        benchmark::DoNotOptimize(gw.data());
    }
    state.SetItemsProcessed(state.iterations() * batch * width * width);
}

template <bool Parallel>
void bm_bn_forward_train(benchmark::State& state) {
    const std::size_t batch = state.range(0), width = state.range(1);
    const Matrixf x = random_matrix(batch, width, 1);
    const auto scale = random_vec(width, 2);
    const auto shift = random_vec(width, 3);
    Matrixf xhat(batch, width), out(batch, width);
    std::vector<float> mean(width), var(width);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::omp::bn_forward_train(x, scale, shift, 1e-5f, xhat, out, mean, var);
        else
            kernels::serial::bn_forward_train(x, scale, shift, 1e-5f, xhat, out, mean, var);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * batch * width);
}

// Whole-network training step (forward + parameter gradients) at desk and
// paper widths, the loop the training pipeline spends its time in.
template <bool Parallel>
void bm_train_step(benchmark::State& state) {
    const std::size_t batch = state.range(0), width = state.range(1);
    kernels::set_exec_mode(Parallel ? kernels::ExecMode::Parallel : kernels::ExecMode::Serial);
    NetworkSpec spec{2, 1, {static_cast<int>(width), static_cast<int>(width),
                            static_cast<int>(width)}, true};
    Network<float> net(spec, 7);
    net.set_mode(Mode::Training);
    Gradients<float> grads = net.make_gradients();
    const Matrixf x = random_matrix(batch, 2, 1);
    const Matrixf y = random_matrix(batch, 1, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.param_gradients(x, y, grads));
    }
    kernels::set_exec_mode(kernels::ExecMode::Parallel);
}

}  // namespace

BENCHMARK(bm_linear_forward<false>)->Name("linear_forward/serial")
    ->Args({128, 128})->Args({1024, 500})->Args({10000, 128});
BENCHMARK(bm_linear_forward<true>)->Name("linear_forward/omp")
    ->Args({128, 128})->Args({1024, 500})->Args({10000, 128});
BENCHMARK(bm_linear_grad_params<false>)->Name("linear_grad_params/serial")
    ->Args({128, 128})->Args({1024, 500});
BENCHMARK(bm_linear_grad_params<true>)->Name("linear_grad_params/omp")
    ->Args({128, 128})->Args({1024, 500});
BENCHMARK(bm_bn_forward_train<false>)->Name("bn_forward_train/serial")
    ->Args({1024, 500});
BENCHMARK(bm_bn_forward_train<true>)->Name("bn_forward_train/omp")
    ->Args({1024, 500});
BENCHMARK(bm_train_step<false>)->Name("train_step/serial")
    ->Args({128, 128})->Args({1024, 500})->Unit(benchmark::kMillisecond);
BENCHMARK(bm_train_step<true>)->Name("train_step/omp")
    ->Args({128, 128})->Args({1024, 500})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
