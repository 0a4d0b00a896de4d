#pragma once

#include <cstddef>
#include <span>

namespace frettrace {

enum class DeviationLossKind { kContinuousBernoulli, kMeanSquaredError };
enum class DeviationMaskMode { kActivity, kAll };

struct LossConfig {
    double gamma = 10.0;
    double lambda_inh = 10.0;
    DeviationLossKind deviation_loss = DeviationLossKind::kContinuousBernoulli;
    double r = 1.0;  // semitones; shared with StringConfig
    DeviationMaskMode dev_mask = DeviationMaskMode::kActivity;

    void validate() const;
};

struct LossValues {
    double tablature = 0.0;
    double inhibition = 0.0;
    double onsets = 0.0;
    double deviation = 0.0;
    double total = 0.0;
};

// All grids are laid out frame-major, then string-major, fret-minor:
// index = (frame * n_strings + string) * n_classes + fret_class.
// Losses sum over string/fret pairs and average over frames; the deviation
// loss averages over masked entries only.

/// Summed binary cross-entropy between logistic(logit) and target over all
/// pairs of one frame, averaged over frames. Used for both the tablature
/// and the onset head.
template <typename Real>
double loss_binary_pairs(std::span<const Real> logits, std::span<const Real> targets,
                         std::size_t n_frames);

/// Adds d(loss)/d(logit) * scale into grad.
template <typename Real>
void loss_binary_pairs_grad(std::span<const Real> logits, std::span<const Real> targets,
                            std::size_t n_frames, Real scale, std::span<Real> grad);

/// Sum over same-string activation pair products, per frame and string,
/// averaged over frames. Takes activations (already through the logistic).
template <typename Real>
double loss_inhibition(std::span<const Real> activations, std::size_t n_frames,
                       std::size_t n_strings, std::size_t n_classes);

/// Adds d(loss)/d(activation) * scale into grad.
template <typename Real>
void loss_inhibition_grad(std::span<const Real> activations, std::size_t n_frames,
                          std::size_t n_strings, std::size_t n_classes, Real scale,
                          std::span<Real> grad);

/// Deviation loss over masked entries. Continuous Bernoulli mode computes the
/// mean NLL (may be negative); MSE mode the mean squared error between
/// logistic(logit) and the [0,1] target. An all-zero mask contributes 0.
template <typename Real>
double loss_deviation(std::span<const Real> logits, std::span<const Real> targets_x,
                      std::span<const Real> mask, DeviationLossKind kind);

template <typename Real>
void loss_deviation_grad(std::span<const Real> logits, std::span<const Real> targets_x,
                         std::span<const Real> mask, DeviationLossKind kind, Real scale,
                         std::span<Real> grad);

/// Composes the per-head losses. With the continuous Bernoulli deviation loss:
/// total = (1/gamma) * (L_tab + lambda * L_inh + L_ons) + L_dev.
/// MSE mode uses the rescaled form
/// total = L_tab + lambda * L_inh + L_ons + gamma * L_dev.
double loss_total(double l_tab, double l_inh, double l_ons, double l_dev,
                  const LossConfig& cfg);

}  // namespace frettrace
