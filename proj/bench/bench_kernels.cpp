// Serial reference kernels against their OpenMP counterparts on pipeline-sized inputs.

#include <benchmark/benchmark.h>

#include <random>

#include "muvos/memory.hpp"
#include "muvos/mu_layer.hpp"
#include "muvos/ops.hpp"
#include "muvos/reference.hpp"

using namespace muvos;

namespace {

Tensor random_tensor(Shape shape, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

// Encoder-sized 3x3 convolution: range(0) channels in and out on a 64x64 map.
template <bool Parallel>
void BM_Conv2d(benchmark::State& state) {
    const auto c = static_cast<std::size_t>(state.range(0));
    const Tensor in = random_tensor({c, 64, 64}, 1);
    const ConvParams p = ConvParams::fan_in_uniform(c, c, 3, 2);
    for (auto _ : state) {
        Tensor out = Parallel ? conv2d(in, p.weights, p.bias, 1, 1) : reference::conv2d(in, p.weights, p.bias, 1, 1);
        benchmark::DoNotOptimize(out.data().data());
    }
}

// Cost volume over a range(0) x range(0) grid of 16-channel features, 25x25 window.
template <bool Parallel>
void BM_CostVolume(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor a = random_tensor({16, n, n}, 3), b = random_tensor({16, n, n}, 4);
    const Window w{25, 25};
    for (auto _ : state) {
        CostVolume c = Parallel ? build_cost_volume(a, b, w) : reference::build_cost_volume(a, b, w);
        benchmark::DoNotOptimize(c.values.data().data());
    }
}

// Memory read against a five-frame bank on a range(0) x range(0) grid, Dk = 8, Dv = 32.
template <bool Parallel>
void BM_MemoryRead(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    MemoryBank bank;
    for (int f = 0; f < 5; ++f)
        bank.write(1 + 5 * f, random_tensor({8, n, n}, 10 + f), random_tensor({32, n, n}, 20 + f));
    const QueryEmbedding q{random_tensor({8, n, n}, 5), random_tensor({32, n, n}, 6)};
    for (auto _ : state) {
        Tensor out = Parallel ? memory_read(bank, q) : reference::memory_read(bank, q);
        benchmark::DoNotOptimize(out.data().data());
    }
}

}  // namespace

BENCHMARK(BM_Conv2d<false>)->Name("conv2d/serial")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2d<true>)->Name("conv2d/openmp")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CostVolume<false>)->Name("cost_volume/serial")->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CostVolume<true>)->Name("cost_volume/openmp")->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MemoryRead<false>)->Name("memory_read/serial")->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MemoryRead<true>)->Name("memory_read/openmp")->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
