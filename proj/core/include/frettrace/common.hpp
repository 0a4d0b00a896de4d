#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace frettrace {

inline constexpr double kSampleRate = 22050.0;
inline constexpr int kHopLength = 512;

/// MIDI note number -> frequency in Hz (A4 = 69 = 440 Hz).
inline double midi_to_hz(double midi) {
    return 440.0 * std::exp2((midi - 69.0) / 12.0);
}

/// Frequency in Hz -> continuous MIDI note number.
inline double hz_to_midi(double hz) {
    if (hz <= 0.0) {
        throw std::domain_error("hz_to_midi: frequency must be positive, got " +
                                std::to_string(hz));
    }
    return 69.0 + 12.0 * std::log2(hz / 440.0);
}

/// Logistic map, numerically safe for any finite argument.
template <typename Real>
Real logistic(Real z) {
    if (z >= Real(0)) {
        return Real(1) / (Real(1) + std::exp(-z));
    }
    const Real e = std::exp(z);
    return e / (Real(1) + e);
}

/// log(1 + exp(t)) without overflow.
template <typename Real>
Real softplus(Real t) {
    if (t > Real(0)) {
        return t + std::log1p(std::exp(-t));
    }
    return std::log1p(std::exp(t));
}

}  // namespace frettrace
