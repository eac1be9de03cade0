#include <benchmark/benchmark.h>

#include "phaseless/pipeline.hpp"

using namespace phaseless;

static void BM_KernelQuadrature(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    double q = 0.0;
    for (auto _ : state) {
        q += 1e-3;
        if (q >= 1.0) q = 1e-3;
        benchmark::DoNotOptimize(kernel_T(n, 0.8, 0.8 * q));
    }
}
BENCHMARK(BM_KernelQuadrature)->Arg(2)->Arg(7)->Arg(16);

static void BM_KernelClosedForm(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    double q = 0.0;
    for (auto _ : state) {
        q += 1e-3;
        if (q >= 1.0) q = 1e-3;
        benchmark::DoNotOptimize(kernel_G(n, q));
    }
}
BENCHMARK(BM_KernelClosedForm)->Arg(2)->Arg(7)->Arg(16);

static void BM_VolterraBuild(benchmark::State& state) {
    const auto grid = RadialGrid::uniform(1.0, static_cast<size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(VolterraOperator::build(static_cast<int>(state.range(0)), grid));
}
BENCHMARK(BM_VolterraBuild)->Args({2, 64})->Args({3, 64})->Args({3, 256})->Unit(benchmark::kMillisecond);

static void BM_CormackReconstruct(benchmark::State& state) {
    const Slice s = Slice::make(0.0, 1.0);
    const auto sino = exact_sinogram(default_two_bump_phantom(), s, ChordGrid::uniform(s, 180, 128));
    const auto polar = to_polar(sino);
    for (auto _ : state) benchmark::DoNotOptimize(cormack_reconstruct(polar));
}
BENCHMARK(BM_CormackReconstruct)->Unit(benchmark::kMillisecond);
