#include "frettrace/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "frettrace/common.hpp"

namespace frettrace {

double PitchModulation::deviation_at(double t, double duration) const {
    switch (kind) {
        case Kind::kNone:
            return 0.0;
        case Kind::kLinearBend:
            return duration > 0.0 ? depth * std::clamp(t / duration, 0.0, 1.0) : 0.0;
        case Kind::kVibrato:
            return depth * std::sin(2.0 * std::numbers::pi * rate_hz * t);
    }
    return 0.0;
}

Fixture synthesize_fixture(const std::vector<FixtureNote>& spec, const StringConfig& cfg,
                           double total_duration_s) {
    cfg.validate();
    constexpr int kHarmonics = 6;
    constexpr double kRampS = 0.010;
    const double hop_s = kHopLength / kSampleRate;

    double end = total_duration_s;
    for (const FixtureNote& fn : spec) {
        if (std::abs(fn.modulation.depth) > cfg.max_deviation_r) {
            throw std::invalid_argument("fixture note modulation exceeds max deviation r");
        }
        end = std::max(end, fn.offset + 0.05);
    }

    Fixture fx;
    fx.audio.sample_rate = kSampleRate;
    fx.audio.samples.assign(static_cast<std::size_t>(std::ceil(end * kSampleRate)), 0.f);

    for (const FixtureNote& fn : spec) {
        const StampedNote note = make_note(fn.string, fn.fret, fn.onset, fn.offset, cfg);
        fx.notes.push_back(note);
        const double duration = note.offset - note.onset;

        // render with per-sample phase accumulation so bends stay coherent
        const std::size_t s0 = static_cast<std::size_t>(std::lround(note.onset * kSampleRate));
        const std::size_t s1 = std::min(
            fx.audio.samples.size(),
            static_cast<std::size_t>(std::lround(note.offset * kSampleRate)));
        double phase = 0.0;
        for (std::size_t s = s0; s < s1; ++s) {
            const double t = static_cast<double>(s) / kSampleRate - note.onset;
            const double midi =
                note.nominal_pitch + fn.modulation.deviation_at(t, duration);
            phase += midi_to_hz(midi) / kSampleRate;
            double env = 1.0;
            if (t < kRampS) env = t / kRampS;
            const double remaining = duration - t;
            if (remaining < kRampS) env = std::min(env, remaining / kRampS);
            double v = 0.0;
            for (int k = 1; k <= kHarmonics; ++k) {
                v += std::sin(2.0 * std::numbers::pi * k * phase) / k;
            }
            fx.audio.samples[s] += static_cast<float>(fn.amplitude * env * v);
        }

        // ground-truth observations on the feature frame grid
        const int first = static_cast<int>(std::ceil(note.onset / hop_s - 1e-9));
        for (int frame = std::max(first, 0);; ++frame) {
            const double tt = frame * hop_s;
            if (tt >= note.offset) break;
            const double midi =
                note.nominal_pitch + fn.modulation.deviation_at(tt - note.onset, duration);
            fx.observations.push_back(PitchObservation{tt, midi, note.string});
        }
    }

    std::sort(fx.observations.begin(), fx.observations.end(),
              [](const PitchObservation& a, const PitchObservation& b) {
                  return a.time < b.time;
              });
    std::sort(fx.notes.begin(), fx.notes.end(),
              [](const StampedNote& a, const StampedNote& b) { return a.onset < b.onset; });
    return fx;
}

}  // namespace frettrace
