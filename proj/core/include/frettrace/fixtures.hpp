#pragma once

#include <vector>

#include "frettrace/annotations.hpp"
#include "frettrace/audio.hpp"

namespace frettrace {

/// Pitch modulation shape applied to one synthesized note, as a deviation
/// in semitones from the nominal pitch over the note's lifetime.
struct PitchModulation {
    enum class Kind { kNone, kLinearBend, kVibrato } kind = Kind::kNone;
    double depth = 0.0;    // bend endpoint or vibrato amplitude, semitones
    double rate_hz = 5.0;  // vibrato only

    double deviation_at(double t, double duration) const;
};

struct FixtureNote {
    int string = 0;
    int fret = 0;
    double onset = 0.0;
    double offset = 0.0;
    PitchModulation modulation{};
    double amplitude = 0.25;
};

struct Fixture {
    AudioClip audio;
    std::vector<StampedNote> notes;
    std::vector<PitchObservation> observations;
};

/// Renders additive-sawtooth audio for the given notes and samples
/// ground-truth pitch observations on the feature frame grid. Rejects notes
/// whose modulation exceeds the maximum deviation r.
Fixture synthesize_fixture(const std::vector<FixtureNote>& spec, const StringConfig& cfg,
                           double total_duration_s = 0.0);

}  // namespace frettrace
