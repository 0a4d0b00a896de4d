#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "frettrace/annotations.hpp"
#include "frettrace/decoding.hpp"

namespace frettrace {

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Raw match counts; associative, so per-track counts can be reduced.
struct MatchCounts {
    std::size_t tp = 0;
    std::size_t n_pred = 0;
    std::size_t n_ref = 0;

    MatchCounts& operator+=(const MatchCounts& o) {
        tp += o.tp;
        n_pred += o.n_pred;
        n_ref += o.n_ref;
        return *this;
    }

    /// Empty-vs-empty scores 1 by convention; empty-vs-nonempty scores 0.
    PRF prf() const;
};

// --- frame-level -----------------------------------------------------------

/// True positive = exact (string, fret, frame) match. Rejects mismatched
/// frame counts.
MatchCounts frame_tablature_counts(const FrameTablature& pred, const FrameTablature& ref);
PRF frame_tablature_prf(const FrameTablature& pred, const FrameTablature& ref);

/// Collapses (string, fret) to nominal MIDI pitch per frame (duplicates
/// merge into a set); exact semitone matches count.
MatchCounts frame_multipitch_counts(const FrameTablature& pred, const FrameTablature& ref,
                                    const StringConfig& scfg);
PRF frame_multipitch_prf(const FrameTablature& pred, const FrameTablature& ref,
                         const StringConfig& scfg);

// --- note-level (onset only) ------------------------------------------------

struct NoteMatchConfig {
    double onset_tolerance_s = 0.050;
    double pitch_tolerance_st = 0.5;
    bool string_dependent = false;
};

/// Optimal one-to-one matching (maximum bipartite matching); offsets are
/// ignored.
MatchCounts note_match_counts(const std::vector<StampedNote>& pred,
                              const std::vector<StampedNote>& ref,
                              const NoteMatchConfig& cfg);
PRF note_prf(const std::vector<StampedNote>& pred, const std::vector<StampedNote>& ref,
             bool string_dependent);

// --- continuous multi-pitch --------------------------------------------------

/// One pitch per sounding string per frame.
struct FramePitch {
    int string = 0;
    double pitch = 0.0;
};
using PitchGrid = std::vector<std::vector<FramePitch>>;  // [frame] -> active pitches

/// Predictions resampled to the frame grid: nominal + decoded deviation for
/// every active slot.
PitchGrid pitch_grid_from_frames(const FrameTablature& frames, const StringConfig& scfg);

/// Same grid with deviations forced to zero (the performance floor of
/// nominal-pitch predictions).
PitchGrid nominal_pitch_baseline(const FrameTablature& frames, const StringConfig& scfg);

/// Reference pitches resampled to the frame grid: per string, linear
/// interpolation between observations, with gaps larger than max_gap_s left
/// silent.
PitchGrid pitch_grid_from_observations(const std::vector<PitchObservation>& obs, int n_frames,
                                       double hop_seconds = kHopLength / kSampleRate,
                                       double max_gap_s = 0.047);

struct ToleranceSweep {
    std::vector<double> tolerances;  // strictly increasing, semitones
    std::vector<PRF> string_dependent;
    std::vector<PRF> string_agnostic;
};

/// Default tolerance grid for the sweep plots.
std::vector<double> default_tolerance_grid();

/// Per frame, one-to-one matching of predicted and reference pitches within
/// tau semitones (same string required in the dependent mode). Optimal
/// matching by default; greedy nearest-pitch behind the flag.
MatchCounts continuous_mpe_counts(const PitchGrid& pred, const PitchGrid& ref, double tau,
                                  bool string_dependent, bool greedy = false);

ToleranceSweep continuous_mpe_sweep(const PitchGrid& pred, const PitchGrid& ref,
                                    const std::vector<double>& tolerances, bool greedy = false);

// --- reporting ---------------------------------------------------------------

struct MetricsRow {
    std::string track_id;
    std::string family;   // e.g. "frame_tablature", "note_string_dependent"
    double tolerance = 0; // 0 when not applicable
    PRF scores;
};

/// One row per track x metric family x tolerance.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

/// Machine-readable aggregate: family -> mean PRF over tracks.
void write_metrics_summary_json(const std::filesystem::path& path,
                                const std::vector<MetricsRow>& rows);

/// Mean over rows sharing (family, tolerance).
std::map<std::pair<std::string, double>, PRF> aggregate_rows(const std::vector<MetricsRow>& rows);

/// Tolerance sweep exchange format for the plot command.
void write_sweep_json(const std::filesystem::path& path, const std::string& label,
                      const ToleranceSweep& sweep);
std::pair<std::string, ToleranceSweep> read_sweep_json(const std::filesystem::path& path);

}  // namespace frettrace
