#include <benchmark/benchmark.h>

#include "kooplift/dictionary.hpp"
#include "kooplift/distill.hpp"
#include "kooplift/koopman.hpp"
#include "kooplift/linalg.hpp"
#include "kooplift/rng.hpp"

using namespace kooplift;

namespace {

DenseMatrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
    SplitMix64 rng(seed);
    DenseMatrix m(rows, cols);
    for (double& v : m.data) v = rng.next_uniform(-1, 1);
    return m;
}

void BM_Matmul(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const DenseMatrix a = random_matrix(1, n, n);
    const DenseMatrix b = random_matrix(2, n, n);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_Svd(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const DenseMatrix a = random_matrix(3, n, n);
    for (auto _ : state) benchmark::DoNotOptimize(svd(a));
}
BENCHMARK(BM_Svd)->Arg(32)->Arg(128);

void BM_Pinv(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const DenseMatrix a = random_matrix(4, n, n);
    for (auto _ : state) benchmark::DoNotOptimize(pinv(a));
}
BENCHMARK(BM_Pinv)->Arg(64)->Arg(231);

void BM_Lift(benchmark::State& state) {
    const std::size_t degree = static_cast<std::size_t>(state.range(0));
    const Dictionary dict = build_dictionary(20, degree);
    const DenseMatrix z = random_matrix(5, 512, 20);
    for (auto _ : state) benchmark::DoNotOptimize(lift(dict, z));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 512);
}
BENCHMARK(BM_Lift)->Arg(2)->Arg(3);

void BM_EdmdFit(benchmark::State& state) {
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    const DenseMatrix psi = random_matrix(6, 2048, m);
    const DenseMatrix y = random_matrix(7, 2048, 10);
    for (auto _ : state) benchmark::DoNotOptimize(edmd_fit({psi, y}));
}
BENCHMARK(BM_EdmdFit)->Arg(66)->Arg(231);

void BM_KdLossGrad(benchmark::State& state) {
    const DenseMatrix psi = random_matrix(8, 32, 231);
    const DenseMatrix yt = random_matrix(9, 32, 10);
    const DenseMatrix k = random_matrix(10, 231, 10);
    std::vector<int> labels(32);
    SplitMix64 rng(11);
    for (auto& l : labels) l = static_cast<int>(rng.next_below(10));
    for (auto _ : state) benchmark::DoNotOptimize(kd_loss_grad(psi, yt, labels, k, 0.9, 2.0));
}
BENCHMARK(BM_KdLossGrad);

}  // namespace

BENCHMARK_MAIN();
