#include <benchmark/benchmark.h>

#include <random>

#include "frettrace/model.hpp"

namespace {

frettrace::Tensor random_windows(int n, const frettrace::ModelConfig& cfg, unsigned seed) {
    frettrace::Tensor x(n, cfg.in_channels, cfg.n_bins, cfg.window_frames);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(0.f, 1.f);
    for (auto& v : x.v) v = dist(rng);
    return x;
}

void BM_ForwardEval(benchmark::State& state) {
    frettrace::ModelConfig cfg;
    frettrace::TabModel model(cfg);
    model.init(11);
    const auto x = random_windows(static_cast<int>(state.range(0)), cfg, 3);
    std::mt19937_64 rng(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward(x, false, rng));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardEval)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
    frettrace::ModelConfig cfg;
    frettrace::TabModel model(cfg);
    model.init(11);
    const auto x = random_windows(static_cast<int>(state.range(0)), cfg, 3);
    std::mt19937_64 rng(5);
    for (auto _ : state) {
        auto logits = model.forward(x, true, rng);
        frettrace::HeadLogitsBatch grads = logits;  // arbitrary nonzero gradients
        model.backward(grads);
        model.zero_grad();
        benchmark::DoNotOptimize(logits);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
