#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "frettrace/continuous_bernoulli.hpp"
#include "frettrace/losses.hpp"

namespace {

std::vector<float> random_block(std::size_t n, float lo, float hi, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

void BM_CbMean(benchmark::State& state) {
    const auto z = random_block(4096, -8.f, 8.f, 1);
    for (auto _ : state) {
        double acc = 0.0;
        for (float v : z) acc += frettrace::cb::mean_from_logit(v);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(z.size()));
}
BENCHMARK(BM_CbMean);

void BM_DeviationLoss(benchmark::State& state) {
    const std::size_t frames = 200, pairs = 120;
    const auto logits = random_block(frames * pairs, -6.f, 6.f, 2);
    const auto x = random_block(frames * pairs, 0.01f, 0.99f, 3);
    auto mask = random_block(frames * pairs, 0.f, 1.f, 4);
    for (auto& m : mask) m = m > 0.9f ? 1.f : 0.f;
    std::vector<float> grad(logits.size());
    for (auto _ : state) {
        std::fill(grad.begin(), grad.end(), 0.f);
        const double loss = frettrace::loss_deviation<float>(
            logits, x, mask, frettrace::DeviationLossKind::kContinuousBernoulli);
        frettrace::loss_deviation_grad<float>(
            logits, x, mask, frettrace::DeviationLossKind::kContinuousBernoulli, 1.f, grad);
        benchmark::DoNotOptimize(loss);
        benchmark::DoNotOptimize(grad.data());
    }
}
BENCHMARK(BM_DeviationLoss);

void BM_InhibitionLoss(benchmark::State& state) {
    const std::size_t frames = 200, strings = 6, classes = 20;
    const auto act = random_block(frames * strings * classes, 0.f, 1.f, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            frettrace::loss_inhibition<float>(act, frames, strings, classes));
    }
}
BENCHMARK(BM_InhibitionLoss);

}  // namespace
