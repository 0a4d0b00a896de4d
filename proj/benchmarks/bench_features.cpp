#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "frettrace/audio.hpp"
#include "frettrace/features.hpp"

namespace {

frettrace::AudioClip test_clip(double seconds) {
    std::vector<float> samples(static_cast<std::size_t>(seconds * 22050));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double t = static_cast<double>(i) / 22050.0;
        samples[i] = static_cast<float>(0.4 * std::sin(2.0 * std::numbers::pi * 196.0 * t) +
                                        0.3 * std::sin(2.0 * std::numbers::pi * 293.7 * t));
    }
    return frettrace::make_clip(std::move(samples));
}

void BM_Hcqt(benchmark::State& state) {
    const auto clip = test_clip(static_cast<double>(state.range(0)));
    const auto cfg = frettrace::FeatureConfig::hcqt();
    for (auto _ : state) {
        benchmark::DoNotOptimize(frettrace::compute_hcqt(clip, cfg));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 22050);
}
BENCHMARK(BM_Hcqt)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Cqt(benchmark::State& state) {
    const auto clip = test_clip(static_cast<double>(state.range(0)));
    const auto cfg = frettrace::FeatureConfig::cqt();
    for (auto _ : state) {
        benchmark::DoNotOptimize(frettrace::compute_cqt(clip, cfg));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 22050);
}
BENCHMARK(BM_Cqt)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
