#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check: quadrature for the continuous Bernoulli moments, naive
// loops for the loss terms, exhaustive matching for the metric families.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracles {

/// Composite Simpson quadrature on [0,1].
inline double integrate01(const std::function<double(double)>& f, int n_intervals = 20000) {
    const int n = n_intervals % 2 == 0 ? n_intervals : n_intervals + 1;
    const double h = 1.0 / n;
    double acc = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i) {
        acc += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

/// Unnormalized continuous Bernoulli density l^x (1-l)^(1-x).
inline double cb_unnormalized(double lam, double x) {
    return std::pow(lam, x) * std::pow(1.0 - lam, 1.0 - x);
}

/// Normalizer C(l) via quadrature: 1 / integral of the unnormalized density.
inline double cb_normalizer_by_quadrature(double lam) {
    return 1.0 / integrate01([&](double x) { return cb_unnormalized(lam, x); });
}

/// Mean via quadrature of x * C(l) * l^x (1-l)^(1-x).
inline double cb_mean_by_quadrature(double lam) {
    const double c = cb_normalizer_by_quadrature(lam);
    return integrate01([&](double x) { return x * c * cb_unnormalized(lam, x); });
}

/// NLL at (logit, x) evaluated through the quadrature normalizer.
inline double cb_nll_by_quadrature(double logit, double x) {
    const double lam = 1.0 / (1.0 + std::exp(-logit));
    const double c = cb_normalizer_by_quadrature(lam);
    return -(std::log(c) + x * std::log(lam) + (1.0 - x) * std::log(1.0 - lam));
}

// --- naive loss references (layout: [frame][string][class]) -----------------

inline double naive_bce_sum_mean(const std::vector<double>& logits,
                                 const std::vector<double>& targets, std::size_t n_frames) {
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-logits[i]));
        acc += -(targets[i] * std::log(s) + (1.0 - targets[i]) * std::log(1.0 - s));
    }
    return acc / static_cast<double>(n_frames);
}

inline double naive_inhibition(const std::vector<double>& activations, std::size_t n_frames,
                               std::size_t n_strings, std::size_t n_classes) {
    double acc = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t s = 0; s < n_strings; ++s) {
            for (std::size_t i = 0; i < n_classes; ++i) {
                for (std::size_t j = i + 1; j < n_classes; ++j) {
                    acc += activations[(f * n_strings + s) * n_classes + i] *
                           activations[(f * n_strings + s) * n_classes + j];
                }
            }
        }
    }
    return acc / static_cast<double>(n_frames);
}

// --- exhaustive bipartite matching -------------------------------------------

/// Maximum one-to-one matching size by depth-first search over all
/// assignments. Exponential; use only on small instances.
inline std::size_t brute_force_matching(std::size_t n_left, std::size_t n_right,
                                        const std::function<bool(std::size_t, std::size_t)>& ok) {
    std::vector<bool> used(n_right, false);
    std::function<std::size_t(std::size_t)> go = [&](std::size_t u) -> std::size_t {
        if (u == n_left) return 0;
        std::size_t best = go(u + 1);  // leave u unmatched
        for (std::size_t v = 0; v < n_right; ++v) {
            if (used[v] || !ok(u, v)) continue;
            used[v] = true;
            best = std::max(best, 1 + go(u + 1));
            used[v] = false;
        }
        return best;
    };
    return go(0);
}

}  // namespace oracles
