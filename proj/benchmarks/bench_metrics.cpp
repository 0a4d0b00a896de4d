#include <benchmark/benchmark.h>

#include <random>

#include "frettrace/metrics.hpp"

namespace {

frettrace::FrameTablature random_frames(int n_frames, double density, unsigned seed) {
    frettrace::FrameTablature ft;
    ft.n_strings = 6;
    ft.n_frames = n_frames;
    ft.slots.assign(static_cast<std::size_t>(n_frames) * 6, frettrace::StringSlot{});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_int_distribution<int> fret(0, 19);
    std::uniform_real_distribution<float> dev(-1.f, 1.f);
    for (auto& slot : ft.slots) {
        if (uni(rng) < density) {
            slot.fret = fret(rng);
            slot.activation = 1.f;
            slot.deviation = dev(rng);
        }
    }
    return ft;
}

void BM_FrameTablaturePrf(benchmark::State& state) {
    const auto pred = random_frames(2000, 0.3, 1);
    const auto ref = random_frames(2000, 0.3, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(frettrace::frame_tablature_prf(pred, ref));
    }
}
BENCHMARK(BM_FrameTablaturePrf);

void BM_ContinuousMpeSweep(benchmark::State& state) {
    frettrace::StringConfig scfg;
    const auto pred = frettrace::pitch_grid_from_frames(random_frames(2000, 0.3, 3), scfg);
    const auto ref = frettrace::pitch_grid_from_frames(random_frames(2000, 0.3, 4), scfg);
    const auto taus = frettrace::default_tolerance_grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(frettrace::continuous_mpe_sweep(pred, ref, taus));
    }
}
BENCHMARK(BM_ContinuousMpeSweep);

}  // namespace
