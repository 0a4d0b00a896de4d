#pragma once

#include <span>

namespace frettrace::cb {

// Distribution over x in [0,1] with density C(l) * l^x * (1-l)^(1-x),
// normalizer C(l) = 2*atanh(1-2l)/(1-2l), C(1/2) = 2. In logit space
// (z = log(l/(1-l))) the density is the exponential family exp(x*z)/Z(z)
// with Z(z) = (e^z - 1)/z, which keeps every quantity below stable for
// arbitrarily large |z|.

/// Half-width of the series branch around l = 1/2.
inline constexpr double kSeriesEps = 1e-6;

/// log C(l). Throws std::domain_error unless l is in (0,1).
double log_normalizer(double lam);

/// Expected value of the distribution with parameter l in (0,1).
/// Strictly increasing in l; mean(1/2) = 1/2 exactly.
double mean(double lam);

/// Expected value parameterized by the logit z = log(l/(1-l)).
double mean_from_logit(double z);

/// log C evaluated from the logit; equals log_normalizer(logistic(z)).
double log_normalizer_from_logit(double z);

/// Negative log-likelihood of x in [0,1] under the distribution
/// parameterized by `logit`. Not bounded below by zero.
double nll(double logit, double x);

/// d nll / d logit. Collapses to mean_from_logit(logit) - x.
double nll_grad(double logit, double x);

/// Inverse of mean_from_logit. The target is clamped to the mean range
/// reachable with |logit| <= 500 (within ~2e-3 of the open interval ends).
double logit_for_mean(double target_mean);

/// Maps a deviation head logit to a signed pitch deviation in [-r, r]:
/// d = (2*mean(logistic(z)) - 1) * r.
double deviation_from_logit(double z, double r);

/// Sigmoid-activation variant used by the squared-error deviation mode:
/// d = (2*logistic(z) - 1) * r.
double deviation_from_logit_sigmoid(double z, double r);

/// Vectorized deviation mapping; out.size() must equal logits.size().
void deviations_from_logits(std::span<const float> logits, double r,
                            bool sigmoid_mode, std::span<float> out);

}  // namespace frettrace::cb
