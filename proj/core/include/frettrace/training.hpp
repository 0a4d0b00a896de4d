#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "frettrace/adam.hpp"
#include "frettrace/decoding.hpp"
#include "frettrace/features.hpp"
#include "frettrace/fixtures.hpp"
#include "frettrace/folds.hpp"
#include "frettrace/grouping.hpp"
#include "frettrace/losses.hpp"
#include "frettrace/metrics.hpp"
#include "frettrace/model.hpp"
#include "frettrace/targets.hpp"

namespace frettrace {

struct TrainConfig {
    int iterations = 2500;
    int batch_size = 30;
    int sequence_frames = 200;
    double learning_rate = 5e-4;
    int lr_halving_period = 500;
    int checkpoint_interval = 50;
    std::uint64_t seed = 1234;

    // ablation flags
    LossConfig loss;
    bool deviation_head = true;      // off reproduces the no-deviation ablation
    bool onset_head = true;          // off switches note decoding to clustered runs
    bool standard_grouping = false;  // bypass cluster grouping and realignment
    FeatureMode feature_mode = FeatureMode::kHcqt;

    void validate() const;
};

/// lr(iteration) = learning_rate * 2^(-floor(iteration / halving_period)).
double learning_rate_at(const TrainConfig& cfg, std::int64_t iteration);

/// Everything the harness needs for one recording. Training targets come
/// from realigned notes; evaluation always uses the original annotations.
struct TrackData {
    std::string id;
    SpectralFeatures features;
    TablatureTargets targets;
    std::vector<StampedNote> original_notes;
    std::vector<PitchObservation> observations;
};

struct DatasetOptions {
    StringConfig strings;
    GroupingConfig grouping;
    FeatureConfig features = FeatureConfig::hcqt();
    bool standard_grouping = false;
    std::filesystem::path cache_dir;  // empty disables the feature cache
};

/// Features + grouped/realigned targets for one recording.
TrackData build_track_data(std::string id, const AudioClip& audio,
                           const TrackAnnotations& annotations, const DatasetOptions& opts);

/// Convenience wrapper for synthesized fixtures.
TrackData build_fixture_track(std::string id, const std::vector<FixtureNote>& spec,
                              const DatasetOptions& opts);

// --- GuitarSet-style on-disk layout ----------------------------------------

struct DatasetLayout {
    std::filesystem::path annotation_dir;  // <id>.jams
    std::filesystem::path audio_dir;       // <id><audio_suffix>
    std::string audio_suffix = "_mic.wav";
};

std::vector<std::string> list_track_ids(const DatasetLayout& layout);
TrackData load_dataset_track(const DatasetLayout& layout, const std::string& id,
                             const DatasetOptions& opts);

// --- batch sampling ----------------------------------------------------------

/// One sampled track sequence: windows plus aligned targets. Frames past the
/// end of a short track are silence (zero features, zero targets).
struct SequenceSample {
    std::string track_id;
    Tensor windows;            // [sequence_frames, C, F, 9]
    TablatureTargets targets;  // sequence_frames long
};

/// One 200-frame contiguous sequence per track at a uniform random start
/// offset. Throws when tracks is empty.
std::vector<SequenceSample> sample_batch(const std::vector<const TrackData*>& tracks,
                                         const TrainConfig& cfg, std::mt19937_64& rng);

struct StepStats {
    LossValues losses;
    double lr = 0.0;
};

/// Forward/backward over every sequence in the batch (gradients averaged
/// over sequences) followed by one Adam update. Throws on a non-finite
/// loss.
StepStats train_step(TabModel& model, AdamState& adam, const std::vector<SequenceSample>& batch,
                     const TrainConfig& cfg, double lr, std::mt19937_64& dropout_rng);

// --- evaluation over tracks ----------------------------------------------------

struct TrackEvaluation {
    PRF frame_tablature;
    PRF frame_multipitch;
    PRF note_string_dependent;
    PRF note_string_agnostic;
    ToleranceSweep sweep;
};

/// Full prediction + metric pass against the original annotations.
TrackEvaluation evaluate_track(TabModel& model, const TrackData& track,
                               const StringConfig& scfg, const TrainConfig& cfg);

/// Mean frame-tablature F1 over tracks (the model selection criterion).
double validation_frame_f1(TabModel& model, const std::vector<TrackData>& tracks,
                           const StringConfig& scfg);

// --- folds -------------------------------------------------------------------

struct FoldResult {
    int fold = 0;
    std::filesystem::path best_checkpoint;
    double best_validation_f1 = 0.0;
    std::int64_t best_iteration = -1;
    std::vector<std::pair<std::int64_t, double>> validation_history;
    std::map<std::string, PRF> test_metrics;
    ToleranceSweep test_sweep;
};

/// Trains one fold: periodic checkpoints, validation frame-tablature F1 as
/// the selection criterion, JSON-lines training log, divergence -> abort
/// with a diagnostic checkpoint. Evaluates the selected checkpoint on the
/// test tracks when any are given.
FoldResult train_fold(int fold_index, const std::vector<TrackData>& train,
                      const std::vector<TrackData>& validation,
                      const std::vector<TrackData>& test, const TrainConfig& cfg,
                      const StringConfig& scfg, const FeatureConfig& fcfg,
                      const std::filesystem::path& out_dir);

struct CrossValidationResult {
    std::vector<FoldResult> folds;
    std::map<std::string, PRF> aggregate;  // mean over folds per metric family
};

/// Six-fold cross-validation over a GuitarSet-style dataset directory.
CrossValidationResult cross_validate(const DatasetLayout& layout, const DatasetOptions& dopts,
                                     const TrainConfig& cfg,
                                     const std::filesystem::path& out_dir);

/// Table-shaped report row (4 metric families x P/R/F1) for one
/// configuration.
void write_crossval_report(const std::filesystem::path& path, const std::string& label,
                           const CrossValidationResult& result);

}  // namespace frettrace
