#include "frettrace/continuous_bernoulli.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "frettrace/common.hpp"

namespace frettrace::cb {

namespace {

void check_open_unit(double lam) {
    if (!(lam > 0.0 && lam < 1.0)) {
        throw std::domain_error("continuous Bernoulli parameter must lie in (0,1), got " +
                                std::to_string(lam));
    }
}

}  // namespace

double log_normalizer(double lam) {
    check_open_unit(lam);
    const double u = 1.0 - 2.0 * lam;
    if (std::abs(u) < 2.0 * kSeriesEps) {
        // C = 2*(1 + u^2/3 + u^4/5 + ...) from the atanh series.
        return std::log(2.0) + u * u / 3.0;
    }
    return std::log(2.0 * std::atanh(u) / u);
}

double mean(double lam) {
    check_open_unit(lam);
    const double u = 1.0 - 2.0 * lam;
    if (std::abs(u) < 2.0 * kSeriesEps) {
        return 0.5 - u / 6.0 - (2.0 / 45.0) * u * u * u;
    }
    return lam / (2.0 * lam - 1.0) + 1.0 / (2.0 * std::atanh(u));
}

double mean_from_logit(double z) {
    // atanh(1-2l) = -z/2 exactly, so mean = l/tanh(z/2) - 1/z.
    if (std::abs(z) < 1e-5) {
        return 0.5 + z / 12.0;
    }
    return logistic(z) / std::tanh(z / 2.0) - 1.0 / z;
}

double log_normalizer_from_logit(double z) {
    // C = z / tanh(z/2), even in z.
    const double az = std::abs(z);
    if (az < 1e-5) {
        return std::log(2.0) + z * z / 12.0;
    }
    return std::log(az) - std::log(std::tanh(az / 2.0));
}

double nll(double logit, double x) {
    // x*log(l) + (1-x)*log(1-l) = -x*softplus(-z) - (1-x)*softplus(z)
    return -log_normalizer_from_logit(logit) + x * softplus(-logit) +
           (1.0 - x) * softplus(logit);
}

double nll_grad(double logit, double x) {
    return mean_from_logit(logit) - x;
}

double logit_for_mean(double target_mean) {
    constexpr double kZMax = 500.0;
    double lo = -kZMax;
    double hi = kZMax;
    if (target_mean <= mean_from_logit(lo)) return lo;
    if (target_mean >= mean_from_logit(hi)) return hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mean_from_logit(mid) < target_mean) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double deviation_from_logit(double z, double r) {
    return (2.0 * mean_from_logit(z) - 1.0) * r;
}

double deviation_from_logit_sigmoid(double z, double r) {
    return (2.0 * logistic(z) - 1.0) * r;
}

void deviations_from_logits(std::span<const float> logits, double r,
                            bool sigmoid_mode, std::span<float> out) {
    if (logits.size() != out.size()) {
        throw std::invalid_argument("deviations_from_logits: size mismatch");
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = static_cast<double>(logits[i]);
        out[i] = static_cast<float>(sigmoid_mode ? deviation_from_logit_sigmoid(z, r)
                                                 : deviation_from_logit(z, r));
    }
}

}  // namespace frettrace::cb
