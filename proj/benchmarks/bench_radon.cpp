#include <benchmark/benchmark.h>

#include "phaseless/pipeline.hpp"

using namespace phaseless;

static void BM_RadonForward(benchmark::State& state) {
    const Slice s = Slice::make(0.0, 1.0);
    const auto n = static_cast<size_t>(state.range(0));
    const auto field = sample_medium(default_two_bump_phantom(), s, n);
    const auto grid = ChordGrid::uniform(s, static_cast<int>(n), static_cast<int>(n));
    for (auto _ : state) benchmark::DoNotOptimize(radon_forward(field, grid));
}
BENCHMARK(BM_RadonForward)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_RadonInvert(benchmark::State& state) {
    const Slice s = Slice::make(0.0, 1.0);
    const auto n = static_cast<int>(state.range(0));
    const auto sino = exact_sinogram(default_two_bump_phantom(), s, ChordGrid::uniform(s, n * 3 / 2, n));
    for (auto _ : state) benchmark::DoNotOptimize(radon_invert(sino, {}, static_cast<size_t>(n)));
}
BENCHMARK(BM_RadonInvert)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
