#include "frettrace/losses.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "frettrace/common.hpp"
#include "frettrace/continuous_bernoulli.hpp"

namespace frettrace {

void LossConfig::validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("LossConfig: gamma must be positive");
    if (lambda_inh < 0.0) throw std::invalid_argument("LossConfig: lambda_inh must be nonnegative");
    if (!(r > 0.0)) throw std::invalid_argument("LossConfig: r must be positive");
}

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
}

}  // namespace

template <typename Real>
double loss_binary_pairs(std::span<const Real> logits, std::span<const Real> targets,
                         std::size_t n_frames) {
    check_sizes(logits.size(), targets.size(), "loss_binary_pairs");
    if (n_frames == 0) return 0.0;
    // BCE(sigma(z), t) = softplus(z) - t*z
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = static_cast<double>(logits[i]);
        const double t = static_cast<double>(targets[i]);
        acc += softplus(z) - t * z;
    }
    return acc / static_cast<double>(n_frames);
}

template <typename Real>
void loss_binary_pairs_grad(std::span<const Real> logits, std::span<const Real> targets,
                            std::size_t n_frames, Real scale, std::span<Real> grad) {
    check_sizes(logits.size(), targets.size(), "loss_binary_pairs_grad");
    check_sizes(logits.size(), grad.size(), "loss_binary_pairs_grad");
    if (n_frames == 0) return;
    const Real inv = scale / static_cast<Real>(n_frames);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        grad[i] += inv * (logistic(logits[i]) - targets[i]);
    }
}

template <typename Real>
double loss_inhibition(std::span<const Real> activations, std::size_t n_frames,
                       std::size_t n_strings, std::size_t n_classes) {
    check_sizes(activations.size(), n_frames * n_strings * n_classes, "loss_inhibition");
    if (n_frames == 0) return 0.0;
    // sum_{i<j} a_i*a_j = ((sum a)^2 - sum a^2) / 2 per string and frame
    double acc = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t s = 0; s < n_strings; ++s) {
            const Real* a = activations.data() + (f * n_strings + s) * n_classes;
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t c = 0; c < n_classes; ++c) {
                sum += a[c];
                sum_sq += static_cast<double>(a[c]) * a[c];
            }
            acc += 0.5 * (sum * sum - sum_sq);
        }
    }
    return acc / static_cast<double>(n_frames);
}

template <typename Real>
void loss_inhibition_grad(std::span<const Real> activations, std::size_t n_frames,
                          std::size_t n_strings, std::size_t n_classes, Real scale,
                          std::span<Real> grad) {
    check_sizes(activations.size(), n_frames * n_strings * n_classes, "loss_inhibition_grad");
    check_sizes(activations.size(), grad.size(), "loss_inhibition_grad");
    if (n_frames == 0) return;
    const Real inv = scale / static_cast<Real>(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t s = 0; s < n_strings; ++s) {
            const std::size_t base = (f * n_strings + s) * n_classes;
            Real sum = 0;
            for (std::size_t c = 0; c < n_classes; ++c) sum += activations[base + c];
            for (std::size_t c = 0; c < n_classes; ++c) {
                grad[base + c] += inv * (sum - activations[base + c]);
            }
        }
    }
}

template <typename Real>
double loss_deviation(std::span<const Real> logits, std::span<const Real> targets_x,
                      std::span<const Real> mask, DeviationLossKind kind) {
    check_sizes(logits.size(), targets_x.size(), "loss_deviation");
    check_sizes(logits.size(), mask.size(), "loss_deviation");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (mask[i] == Real(0)) continue;
        const double z = static_cast<double>(logits[i]);
        const double x = static_cast<double>(targets_x[i]);
        if (kind == DeviationLossKind::kContinuousBernoulli) {
            acc += cb::nll(z, x);
        } else {
            const double e = logistic(z) - x;
            acc += e * e;
        }
        ++n;
    }
    if (n == 0) {
        if (!logits.empty()) {
            std::cerr << "frettrace: warning: deviation loss over an empty mask,"
                         " contributing 0\n";
        }
        return 0.0;
    }
    return acc / static_cast<double>(n);
}

template <typename Real>
void loss_deviation_grad(std::span<const Real> logits, std::span<const Real> targets_x,
                         std::span<const Real> mask, DeviationLossKind kind, Real scale,
                         std::span<Real> grad) {
    check_sizes(logits.size(), targets_x.size(), "loss_deviation_grad");
    check_sizes(logits.size(), mask.size(), "loss_deviation_grad");
    check_sizes(logits.size(), grad.size(), "loss_deviation_grad");
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] != Real(0)) ++n;
    }
    if (n == 0) return;
    const double inv = static_cast<double>(scale) / static_cast<double>(n);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (mask[i] == Real(0)) continue;
        const double z = static_cast<double>(logits[i]);
        const double x = static_cast<double>(targets_x[i]);
        double g;
        if (kind == DeviationLossKind::kContinuousBernoulli) {
            g = cb::nll_grad(z, x);
        } else {
            const double s = logistic(z);
            g = 2.0 * (s - x) * s * (1.0 - s);
        }
        grad[i] += static_cast<Real>(inv * g);
    }
}

double loss_total(double l_tab, double l_inh, double l_ons, double l_dev,
                  const LossConfig& cfg) {
    cfg.validate();
    const double discrete = l_tab + cfg.lambda_inh * l_inh + l_ons;
    if (cfg.deviation_loss == DeviationLossKind::kMeanSquaredError) {
        return discrete + cfg.gamma * l_dev;
    }
    return discrete / cfg.gamma + l_dev;
}

#define FRETTRACE_INSTANTIATE_LOSSES(Real)                                                   \
    template double loss_binary_pairs<Real>(std::span<const Real>, std::span<const Real>,    \
                                            std::size_t);                                    \
    template void loss_binary_pairs_grad<Real>(std::span<const Real>, std::span<const Real>, \
                                               std::size_t, Real, std::span<Real>);          \
    template double loss_inhibition<Real>(std::span<const Real>, std::size_t, std::size_t,   \
                                          std::size_t);                                      \
    template void loss_inhibition_grad<Real>(std::span<const Real>, std::size_t,             \
                                             std::size_t, std::size_t, Real,                 \
                                             std::span<Real>);                               \
    template double loss_deviation<Real>(std::span<const Real>, std::span<const Real>,       \
                                         std::span<const Real>, DeviationLossKind);          \
    template void loss_deviation_grad<Real>(std::span<const Real>, std::span<const Real>,    \
                                            std::span<const Real>, DeviationLossKind, Real,  \
                                            std::span<Real>);

FRETTRACE_INSTANTIATE_LOSSES(float)
FRETTRACE_INSTANTIATE_LOSSES(double)

#undef FRETTRACE_INSTANTIATE_LOSSES

}  // namespace frettrace
