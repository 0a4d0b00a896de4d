#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "frettrace/annotations.hpp"
#include "frettrace/common.hpp"
#include "frettrace/model.hpp"
#include "frettrace/targets.hpp"

namespace frettrace {

/// Per-frame, per-string decoding slot: at most one fret class may sound on
/// a string in any frame.
struct StringSlot {
    int fret = -1;  // -1 = inactive
    float activation = 0.f;
    float deviation = 0.f;  // semitones, already mapped to [-r, r]
};

struct FrameTablature {
    int n_strings = 6;
    int n_frames = 0;
    std::vector<StringSlot> slots;  // [frame][string]

    const StringSlot& at(int frame, int string) const {
        return slots[static_cast<std::size_t>(frame) * n_strings + string];
    }
    StringSlot& at(int frame, int string) {
        return slots[static_cast<std::size_t>(frame) * n_strings + string];
    }
};

/// Per-pair boolean onset activity, [frame][string][class].
struct OnsetGrid {
    int n_strings = 6;
    int n_classes = 20;
    int n_frames = 0;
    std::vector<std::uint8_t> active;

    bool at(int frame, int string, int fret_class) const {
        if (active.empty()) return false;
        return active[(static_cast<std::size_t>(frame) * n_strings + string) * n_classes +
                      fret_class] != 0;
    }
};

struct DecodingConfig {
    double activation_threshold = 0.5;  // tablature and onset heads alike
    int min_note_frames = 2;            // clustered decoding only
    bool fret_change_starts_new_note = false;
    bool sigmoid_deviation = false;  // MSE-ablation deviation mapping
};

/// Per string and frame, selects the fret class with maximal activation
/// among those at or above the threshold; none above leaves the string
/// inactive. Deviations come from the deviation head (0 when absent).
FrameTablature threshold_tablature(const HeadLogitsBatch& logits, const StringConfig& scfg,
                                   const DecodingConfig& dcfg = {});

/// Thresholds the onset head the same way the tablature head is
/// thresholded. An absent onset head yields an empty (all-inactive) grid.
OnsetGrid threshold_onsets(const HeadLogitsBatch& logits, const StringConfig& scfg,
                           const DecodingConfig& dcfg = {});

/// Onset-gated note decoding: a note starts only on an onset-active frame
/// that is tablature-active and sustains while the same string/fret pair
/// stays active. A second onset inside a run splits it. Frame-level outputs
/// are never modified.
std::vector<StampedNote> decode_notes(const FrameTablature& frames, const OnsetGrid& onsets,
                                      const std::vector<double>& frame_times,
                                      const StringConfig& scfg,
                                      const DecodingConfig& dcfg = {});

/// Ablation decoding without an onset head: every maximal contiguous run of
/// one string/fret pair becomes a note; runs shorter than min_note_frames
/// are dropped.
std::vector<StampedNote> decode_notes_clustered(const FrameTablature& frames,
                                                const std::vector<double>& frame_times,
                                                const StringConfig& scfg,
                                                const DecodingConfig& dcfg = {});

/// One contour per note: for each of the note's active frames, pitch =
/// nominal + deviation at that (string, fret, frame). Simultaneous notes
/// each receive their own contour.
std::vector<PitchContour> attach_contours(const std::vector<StampedNote>& notes,
                                          const FrameTablature& frames,
                                          const std::vector<double>& frame_times);

struct TranscriptionResult {
    std::vector<StampedNote> notes;
    std::vector<PitchContour> contours;  // parallel to notes
    FrameTablature frame_tablature;
    std::vector<double> frame_times;
};

/// JSON lines, one record per note:
/// {"string":s,"fret":f,"onset_s":...,"offset_s":...,
///  "contour":[{"time_s":...,"pitch_midi":...}]}
void write_transcription(const std::filesystem::path& path, const TranscriptionResult& result);
std::vector<NoteRecord> read_transcription(const std::filesystem::path& path,
                                           const StringConfig& cfg);

/// Compact binary export of the frame grid (shape, frame times, r, slots).
void write_frame_grid(const std::filesystem::path& path, const FrameTablature& frames,
                      const std::vector<double>& frame_times, double r);
FrameTablature read_frame_grid(const std::filesystem::path& path,
                               std::vector<double>* frame_times_out = nullptr,
                               double* r_out = nullptr);

// Reference-grid builders used by evaluation and the round-trip tests.

/// Exact conversion of training targets (deviations mapped back to
/// semitones).
FrameTablature frame_tablature_from_targets(const TablatureTargets& targets,
                                            const StringConfig& scfg);

/// Rasterizes notes (original, un-realigned annotations) leniently: when two
/// same-string notes claim one frame the later onset wins.
FrameTablature frame_tablature_from_notes(const std::vector<StampedNote>& notes, int n_frames,
                                          double hop_seconds = kHopLength / kSampleRate);

/// Encodes targets as saturated logits (+/-12 for activity and onsets, the
/// exact mean-inverse logit for deviations), the oracle input for round-trip
/// pipeline tests.
HeadLogitsBatch oracle_logits_from_targets(const TablatureTargets& targets);

}  // namespace frettrace
