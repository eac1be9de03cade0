#include <benchmark/benchmark.h>

#include "phaseless/raytrace.hpp"

using namespace phaseless;

static void BM_TraceRay(benchmark::State& state) {
    const auto m = default_two_bump_phantom();
    const auto nu = Direction::in_slice(0.3);
    double eta = -0.9;
    for (auto _ : state) {
        eta = eta > 0.9 ? -0.9 : eta + 0.01;
        benchmark::DoNotOptimize(trace_ray(m, nu, eta, 0.0));
    }
}
BENCHMARK(BM_TraceRay)->Unit(benchmark::kMicrosecond);

static void BM_TraceStraight(benchmark::State& state) {
    const RefractiveMedium m(1.0, {});
    const auto nu = Direction::in_slice(0.3);
    for (auto _ : state) benchmark::DoNotOptimize(trace_ray(m, nu, 0.2, 0.0));
}
BENCHMARK(BM_TraceStraight)->Unit(benchmark::kMicrosecond);

static void BM_TravelTimeToPoint(benchmark::State& state) {
    const auto m = default_two_bump_phantom();
    const Slice s = Slice::make(0.0, 1.0);
    const auto chord = boundary_from_chord(s, 1.1, 0.2);
    for (auto _ : state) benchmark::DoNotOptimize(travel_time_to_point(m, chord.nu, chord.x));
}
BENCHMARK(BM_TravelTimeToPoint)->Unit(benchmark::kMicrosecond);
