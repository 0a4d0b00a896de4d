#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "frettrace/audio.hpp"

namespace frettrace {

struct StringConfig {
    std::array<int, 6> open_string_pitches = {40, 45, 50, 55, 59, 64};  // low E to high E
    int n_frets = 19;
    double max_deviation_r = 1.0;  // semitones

    int n_fret_classes() const { return n_frets + 1; }
    void validate() const;
};

/// One frame-level pitch estimate attached to a string.
struct PitchObservation {
    double time = 0.0;   // seconds
    double pitch = 0.0;  // continuous MIDI
    int string = 0;      // 0..5
};

/// A (string, fret) note event. nominal_pitch = open_string + fret.
struct StampedNote {
    int string = 0;
    int fret = 0;
    double onset = 0.0;   // seconds
    double offset = 0.0;  // seconds
    int nominal_pitch = 0;

    bool operator==(const StampedNote&) const = default;
};

/// Continuous pitch series owned by exactly one note.
struct PitchContour {
    std::vector<double> times;
    std::vector<double> pitches;
    std::size_t note_id = 0;  // index into the companion note list

    bool empty() const { return times.empty(); }
};

struct TrackAnnotations {
    std::vector<StampedNote> notes;
    std::vector<PitchObservation> observations;
};

StampedNote make_note(int string, int fret, double onset, double offset,
                      const StringConfig& cfg);

/// Parses a JAMS annotation file carrying per-string "note_midi" and
/// "pitch_contour" namespaces (one annotation of each per string, tagged by
/// data_source). Rejects tracks with missing namespaces or frets outside
/// [0, n_frets].
TrackAnnotations load_jams_annotations(const std::filesystem::path& path,
                                       const StringConfig& cfg);

/// JAMS annotations plus the companion audio file.
std::pair<AudioClip, TrackAnnotations> load_guitarset_track(
    const std::filesystem::path& annotation_path, const std::filesystem::path& audio_path,
    const StringConfig& cfg);

// Normalized intermediate annotation format: JSON lines, one record per
// note with its contour embedded:
// {"string":s,"fret":f,"onset_s":t0,"offset_s":t1,
//  "contour":[{"time_s":t,"pitch_midi":p},...]}

struct NoteRecord {
    StampedNote note;
    std::vector<std::pair<double, double>> contour;  // (time_s, pitch_midi)
};

void write_note_records(const std::filesystem::path& path,
                        const std::vector<NoteRecord>& records);
std::vector<NoteRecord> read_note_records(const std::filesystem::path& path,
                                          const StringConfig& cfg);

/// Flattens note records into (notes, observations) for the grouping and
/// target pipeline.
TrackAnnotations annotations_from_records(const std::vector<NoteRecord>& records);

}  // namespace frettrace
