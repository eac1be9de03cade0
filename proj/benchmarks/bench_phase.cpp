#include <benchmark/benchmark.h>

#include "phaseless/phase.hpp"

using namespace phaseless;

static void BM_Recover(benchmark::State& state) {
    const Slice s = Slice::make(0.0, 1.0);
    const auto chord = boundary_from_chord(s, 0.5, 0.1);
    KGridSpec spec;
    spec.phi_min = 2e-4;
    spec.phi_max = 0.02;
    spec.samples_per_period = 20;
    const auto k = make_k_grid(1.0, spec).values();
    SynthOptions opt;
    opt.noise = static_cast<double>(state.range(0)) * 1e-2;
    const auto series = synth_series(1.02, 0.008, chord, k, opt, 7);
    PeakControl pc;
    pc.mode = PhaseMode::refine;
    for (auto _ : state) benchmark::DoNotOptimize(recover(series, pc));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * k.size()));
}
BENCHMARK(BM_Recover)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_Synth(benchmark::State& state) {
    const Slice s = Slice::make(0.0, 1.0);
    const auto chord = boundary_from_chord(s, 0.5, 0.1);
    const auto k = make_k_grid(1.0, {0.0, 2e-4, 0.02, 20.0, 2.5}).values();
    SynthOptions opt;
    opt.noise = 0.01;
    for (auto _ : state) benchmark::DoNotOptimize(synth_series(1.02, 0.008, chord, k, opt, 7));
}
BENCHMARK(BM_Synth)->Unit(benchmark::kMicrosecond);
