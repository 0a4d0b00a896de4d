#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "frettrace/common.hpp"
#include "frettrace/continuous_bernoulli.hpp"
#include "frettrace/losses.hpp"
#include "support/oracles.hpp"

using namespace frettrace;

TEST_CASE("log normalizer matches the closed form and the quadrature oracle") {
    CHECK(cb::log_normalizer(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // C(0.9) = 2*atanh(-0.8)/(-0.8) = 2.74653...
    const double direct = std::log(2.0 * std::atanh(-0.8) / (-0.8));
    CHECK(cb::log_normalizer(0.9) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(cb::log_normalizer(0.9) == doctest::Approx(1.0103).epsilon(1e-4));

    for (double lam : {0.1, 0.25, 0.6, 0.9, 0.99}) {
        const double oracle = std::log(oracles::cb_normalizer_by_quadrature(lam));
        CHECK(cb::log_normalizer(lam) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("log normalizer is symmetric about one half") {
    for (double lam : {0.1, 0.3}) {
        CHECK(std::abs(cb::log_normalizer(lam) - cb::log_normalizer(1.0 - lam)) < 1e-12);
    }
}

TEST_CASE("log normalizer rejects parameters outside (0,1)") {
    CHECK_THROWS_AS(cb::log_normalizer(0.0), std::domain_error);
    CHECK_THROWS_AS(cb::log_normalizer(1.0), std::domain_error);
    CHECK_THROWS_AS(cb::log_normalizer(-0.2), std::domain_error);
}

TEST_CASE("mean matches the quadrature oracle") {
    CHECK(cb::mean(0.5) == 0.5);  // exact by the symmetric branch
    CHECK(cb::mean(0.9) == doctest::Approx(oracles::cb_mean_by_quadrature(0.9)).epsilon(1e-9));
    CHECK(cb::mean(0.9) == doctest::Approx(0.6699).epsilon(1e-4));
    for (double lam : {0.05, 0.2, 0.45, 0.7, 0.999}) {
        CHECK(cb::mean(lam) == doctest::Approx(oracles::cb_mean_by_quadrature(lam)).epsilon(1e-7));
    }
}

TEST_CASE("mean obeys the reflection identity mu(l) + mu(1-l) = 1") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(1e-4, 1.0 - 1e-4);
    for (int i = 0; i < 200; ++i) {
        const double lam = uni(rng);
        CHECK(cb::mean(lam) + cb::mean(1.0 - lam) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("mean is strictly increasing with limits 0 and 1") {
    double prev = 0.0;
    for (double lam = 1e-5; lam < 1.0; lam += 1e-3) {
        const double m = cb::mean(lam);
        CHECK(m > prev);
        prev = m;
    }
    CHECK(cb::mean_from_logit(-60.0) < 0.02);
    CHECK(cb::mean_from_logit(60.0) > 0.98);
}

TEST_CASE("series and direct branches agree at the switch point") {
    // evaluate both branches just inside and outside the series window
    const double eps = cb::kSeriesEps;
    for (double sign : {-1.0, 1.0}) {
        const double at_switch = 0.5 + sign * eps;
        const double direct = at_switch / (2.0 * at_switch - 1.0) +
                              1.0 / (2.0 * std::atanh(1.0 - 2.0 * at_switch));
        CHECK(cb::mean(at_switch) == doctest::Approx(direct).epsilon(1e-8));

        const double u = 1.0 - 2.0 * at_switch;
        const double direct_logc = std::log(2.0 * std::atanh(u) / u);
        CHECK(cb::log_normalizer(at_switch) == doctest::Approx(direct_logc).epsilon(1e-8));
    }
    // continuity across l = 0.5 +- 1e-9
    CHECK(std::abs(cb::mean(0.5 + 1e-9) - cb::mean(0.5 - 1e-9)) < 1e-8);
    CHECK(std::abs(cb::log_normalizer(0.5 + 1e-9) - cb::log_normalizer(0.5 - 1e-9)) < 1e-8);
}

TEST_CASE("deviation mapping endpoints and midpoint") {
    CHECK(cb::deviation_from_logit(0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cb::deviation_from_logit(200.0, 1.0) > 0.98);
    CHECK(cb::deviation_from_logit(-200.0, 1.0) < -0.98);

    // lambda = 0.9 -> d = 2*mean - 1 scaled by r
    const double z = std::log(0.9 / 0.1);
    const double expected = 2.0 * oracles::cb_mean_by_quadrature(0.9) - 1.0;
    CHECK(cb::deviation_from_logit(z, 1.0) == doctest::Approx(expected).epsilon(1e-7));
    CHECK(cb::deviation_from_logit(z, 1.0) == doctest::Approx(0.3398).epsilon(1e-3));
    CHECK(cb::deviation_from_logit(z, 2.0) == doctest::Approx(2.0 * expected).epsilon(1e-7));
}

TEST_CASE("nll agrees with the quadrature oracle") {
    // at logit 0 the distribution is uniform on [0,1] (density 1), so the
    // per-entry NLL is 0 by the quadrature oracle
    CHECK(oracles::cb_nll_by_quadrature(0.0, 0.5) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(cb::nll(0.0, 0.5) == doctest::Approx(0.0).epsilon(1e-12));

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> zdist(-8.0, 8.0);
    std::uniform_real_distribution<double> xdist(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const double z = zdist(rng);
        const double x = xdist(rng);
        CHECK(cb::nll(z, x) == doctest::Approx(oracles::cb_nll_by_quadrature(z, x)).epsilon(1e-7));
    }

    // the NLL is not bounded below by zero
    CHECK(cb::nll(std::log(0.9 / 0.1), 1.0) < 0.0);
}

TEST_CASE("nll gradient matches central finite differences") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> zdist(-10.0, 10.0);
    std::uniform_real_distribution<double> xdist(1e-3, 1.0 - 1e-3);
    const double h = 1e-4;
    for (int i = 0; i < 100; ++i) {
        const double z = zdist(rng);
        const double x = xdist(rng);
        const double numeric = (cb::nll(z + h, x) - cb::nll(z - h, x)) / (2.0 * h);
        const double analytic = cb::nll_grad(z, x);
        const double denom = std::max(std::abs(numeric), 1e-8);
        CHECK(std::abs(analytic - numeric) / denom < 1e-4);
    }
}

TEST_CASE("minimizing the nll over the logit recovers the encoded deviation") {
    // 1-D grid search oracle at fixed x = 0.8
    const double x = 0.8;
    double best_z = 0.0;
    double best = 1e18;
    for (double z = -20.0; z <= 20.0; z += 1e-3) {
        const double v = cb::nll(z, x);
        if (v < best) {
            best = v;
            best_z = z;
        }
    }
    const double d = cb::deviation_from_logit(best_z, 1.0);
    const double recovered_x = (d + 1.0) / 2.0;
    CHECK(recovered_x == doctest::Approx(x).epsilon(1e-3));
}

TEST_CASE("logit_for_mean inverts the mean mapping") {
    for (double x : {0.02, 0.3, 0.5, 0.77, 0.98}) {
        const double z = cb::logit_for_mean(x);
        CHECK(cb::mean_from_logit(z) == doctest::Approx(x).epsilon(1e-9));
    }
    // saturation near the ends stays within a few thousandths
    CHECK(cb::mean_from_logit(cb::logit_for_mean(0.9999)) > 0.997);
}

// ---------------------------------------------------------------------------
// loss terms

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("tablature loss: perfect predictions drive the loss to zero") {
    const std::size_t frames = 4, pairs = 120;
    std::vector<double> logits(frames * pairs, -30.0);
    std::vector<double> targets(frames * pairs, 0.0);
    logits[5] = 30.0;
    targets[5] = 1.0;
    CHECK(loss_binary_pairs<double>(logits, targets, frames) < 1e-10);
}

TEST_CASE("tablature loss: all-zero logits give log 2 per pair") {
    const std::size_t frames = 3, pairs = 120;
    std::vector<double> logits(frames * pairs, 0.0);
    std::vector<double> targets(frames * pairs, 0.0);
    CHECK(loss_binary_pairs<double>(logits, targets, frames) ==
          doctest::Approx(pairs * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("tablature and onset losses match the naive reference on random input") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t frames = 1 + trial % 7;
        const std::size_t pairs = 6 * (5 + trial % 4);
        const auto logits = random_vector(rng, frames * pairs, -6.0, 6.0);
        auto targets = random_vector(rng, frames * pairs, 0.0, 1.0);
        for (auto& t : targets) t = t > 0.5 ? 1.0 : 0.0;
        const double got = loss_binary_pairs<double>(logits, targets, frames);
        const double want = oracles::naive_bce_sum_mean(logits, targets, frames);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("tablature loss rejects shape mismatches") {
    std::vector<double> a(10, 0.0), b(12, 0.0);
    CHECK_THROWS_AS(loss_binary_pairs<double>(a, b, 2), std::invalid_argument);
}

TEST_CASE("inhibition loss on hand-built cases") {
    const std::size_t frames = 1, strings = 6, classes = 20;
    std::vector<double> act(frames * strings * classes, 0.0);

    SUBCASE("one active class per string gives zero") {
        for (std::size_t s = 0; s < strings; ++s) act[s * classes + 3] = 1.0;
        CHECK(loss_inhibition<double>(act, frames, strings, classes) == 0.0);
    }
    SUBCASE("two full activations on one string give one pair product") {
        act[0 * classes + 2] = 1.0;
        act[0 * classes + 9] = 1.0;
        CHECK(loss_inhibition<double>(act, frames, strings, classes) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("inhibition loss matches the naive triple loop on random input") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t frames = 1 + trial % 5;
        const std::size_t strings = 6;
        const std::size_t classes = 4 + trial % 17;
        const auto act = random_vector(rng, frames * strings * classes, 0.0, 1.0);
        const double got = loss_inhibition<double>(act, frames, strings, classes);
        const double want = oracles::naive_inhibition(act, frames, strings, classes);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("deviation loss: uniform case, MSE mode, empty mask") {
    std::vector<double> logits = {0.0, 0.0};
    std::vector<double> x = {0.5, 0.5};
    std::vector<double> mask = {1.0, 1.0};
    CHECK(loss_deviation<double>(logits, x, mask, DeviationLossKind::kContinuousBernoulli) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // MSE mode with sigma(logit) == x is exactly zero
    std::vector<double> logits2 = {std::log(0.8 / 0.2)};
    std::vector<double> x2 = {0.8};
    std::vector<double> mask2 = {1.0};
    CHECK(loss_deviation<double>(logits2, x2, mask2, DeviationLossKind::kMeanSquaredError) ==
          doctest::Approx(0.0).epsilon(1e-12));

    std::vector<double> none = {0.0, 0.0};
    CHECK(loss_deviation<double>(logits, x, none, DeviationLossKind::kContinuousBernoulli) == 0.0);
}

TEST_CASE("deviation loss gradient matches finite differences through the mask") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> zdist(-6.0, 6.0);
    std::uniform_real_distribution<double> xdist(0.05, 0.95);
    for (auto kind :
         {DeviationLossKind::kContinuousBernoulli, DeviationLossKind::kMeanSquaredError}) {
        std::vector<double> logits(24), x(24), mask(24);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            logits[i] = zdist(rng);
            x[i] = xdist(rng);
            mask[i] = i % 3 == 0 ? 0.0 : 1.0;
        }
        std::vector<double> grad(logits.size(), 0.0);
        loss_deviation_grad<double>(logits, x, mask, kind, 1.0, grad);
        const double h = 1e-5;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            auto bumped = logits;
            bumped[i] += h;
            const double up = loss_deviation<double>(bumped, x, mask, kind);
            bumped[i] -= 2 * h;
            const double down = loss_deviation<double>(bumped, x, mask, kind);
            const double numeric = (up - down) / (2 * h);
            CHECK(grad[i] == doctest::Approx(numeric).epsilon(1e-5));
        }
    }
}

TEST_CASE("total loss composition") {
    LossConfig cfg;  // gamma = 10, lambda = 10
    // (1/10)(1.0 + 10*0.01 + 0.5) + (-0.2) = -0.04
    CHECK(loss_total(1.0, 0.01, 0.5, -0.2, cfg) == doctest::Approx(-0.04).epsilon(1e-12));

    SUBCASE("lambda = 0 removes the inhibition term") {
        cfg.lambda_inh = 0.0;
        CHECK(loss_total(1.0, 123.0, 0.5, -0.2, cfg) ==
              doctest::Approx((1.0 + 0.5) / 10.0 - 0.2).epsilon(1e-12));
    }
    SUBCASE("MSE mode rescales so gamma weights the deviation term") {
        cfg.deviation_loss = DeviationLossKind::kMeanSquaredError;
        CHECK(loss_total(1.0, 0.01, 0.5, 0.02, cfg) ==
              doctest::Approx(1.0 + 0.1 + 0.5 + 0.2).epsilon(1e-12));
    }
    SUBCASE("disabled heads contribute exactly zero") {
        CHECK(loss_total(1.0, 0.01, 0.0, 0.0, cfg) ==
              doctest::Approx((1.0 + 0.1) / 10.0).epsilon(1e-12));
    }
}

TEST_CASE("loss config validation") {
    LossConfig cfg;
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.gamma = 10.0;
    cfg.lambda_inh = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
