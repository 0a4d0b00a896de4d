// Command-line front end: feature cache extraction, training, six-fold
// cross-validation, transcription, evaluation and sweep plots.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "frettrace/decoding.hpp"
#include "frettrace/features.hpp"
#include "frettrace/folds.hpp"
#include "frettrace/metrics.hpp"
#include "frettrace/plotting.hpp"
#include "frettrace/training.hpp"
#include "frettrace/transcribe.hpp"

namespace fs = std::filesystem;
using namespace frettrace;

namespace {

struct DatasetArgs {
    std::string root;
    std::string annotation_dir;
    std::string audio_dir;
    std::string audio_suffix = "_mic.wav";
    std::string cache_dir;

    DatasetLayout layout() const {
        DatasetLayout l;
        l.annotation_dir = annotation_dir.empty() ? fs::path(root) / "annotation"
                                                  : fs::path(annotation_dir);
        l.audio_dir = audio_dir.empty() ? fs::path(root) / "audio_mono-mic" : fs::path(audio_dir);
        l.audio_suffix = audio_suffix;
        return l;
    }
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
    cmd->add_option("--dataset", args.root, "dataset root directory")
        ->envname("FRETTRACE_DATASET_ROOT");
    cmd->add_option("--annotations", args.annotation_dir,
                    "annotation directory (default <dataset>/annotation)");
    cmd->add_option("--audio-dir", args.audio_dir,
                    "audio directory (default <dataset>/audio_mono-mic)");
    cmd->add_option("--audio-suffix", args.audio_suffix, "audio file suffix")->capture_default_str();
    cmd->add_option("--cache-dir", args.cache_dir, "feature cache directory");
}

struct TrainArgs {
    TrainConfig cfg;
    std::string feature_mode = "hcqt";
    std::string deviation_loss = "continuous_bernoulli";
    std::string dev_mask = "activity";
    bool no_deviation_head = false;
    bool no_onset_head = false;
    bool standard_grouping = false;
};

void add_train_options(CLI::App* cmd, TrainArgs& args) {
    cmd->add_option("--iterations", args.cfg.iterations, "training iterations")->capture_default_str();
    cmd->add_option("--batch-size", args.cfg.batch_size, "tracks per batch")->capture_default_str();
    cmd->add_option("--sequence-frames", args.cfg.sequence_frames, "frames sampled per track")->capture_default_str();
    cmd->add_option("--learning-rate", args.cfg.learning_rate, "initial learning rate")->capture_default_str();
    cmd->add_option("--lr-halving-period", args.cfg.lr_halving_period,
                    "iterations between halvings")->capture_default_str();
    cmd->add_option("--checkpoint-interval", args.cfg.checkpoint_interval,
                    "iterations between checkpoints")->capture_default_str();
    cmd->add_option("--seed", args.cfg.seed, "rng seed")->capture_default_str();
    cmd->add_option("--gamma", args.cfg.loss.gamma, "discrete-loss scaling")->capture_default_str();
    cmd->add_option("--lambda-inh", args.cfg.loss.lambda_inh, "inhibition weight")->capture_default_str();
    cmd->add_option("--max-deviation-r", args.cfg.loss.r, "max pitch deviation, semitones")->capture_default_str();
    cmd->add_option("--deviation-loss", args.deviation_loss, "continuous_bernoulli | mse")->capture_default_str()
->check(CLI::IsMember({"continuous_bernoulli", "mse"}));
    cmd->add_option("--dev-mask", args.dev_mask, "activity | all")->capture_default_str()
->check(CLI::IsMember({"activity", "all"}));
    cmd->add_option("--features", args.feature_mode, "hcqt | cqt")->capture_default_str()
->check(CLI::IsMember({"hcqt", "cqt"}));
    cmd->add_flag("--no-deviation-head", args.no_deviation_head, "drop the deviation head");
    cmd->add_flag("--no-onset-head", args.no_onset_head,
                  "drop the onset head (clustered note decoding)");
    cmd->add_flag("--standard-grouping", args.standard_grouping,
                  "train on the provided note-contour grouping");
}

TrainConfig finalize_train_config(const TrainArgs& args) {
    TrainConfig cfg = args.cfg;
    cfg.loss.deviation_loss = args.deviation_loss == "mse"
                                  ? DeviationLossKind::kMeanSquaredError
                                  : DeviationLossKind::kContinuousBernoulli;
    cfg.loss.dev_mask =
        args.dev_mask == "all" ? DeviationMaskMode::kAll : DeviationMaskMode::kActivity;
    cfg.deviation_head = !args.no_deviation_head;
    cfg.onset_head = !args.no_onset_head;
    cfg.standard_grouping = args.standard_grouping;
    cfg.feature_mode = args.feature_mode == "cqt" ? FeatureMode::kCqt : FeatureMode::kHcqt;
    return cfg;
}

DatasetOptions make_dataset_options(const DatasetArgs& data, const TrainConfig& cfg) {
    DatasetOptions opts;
    opts.strings.max_deviation_r = cfg.loss.r;
    opts.features =
        cfg.feature_mode == FeatureMode::kCqt ? FeatureConfig::cqt() : FeatureConfig::hcqt();
    opts.standard_grouping = cfg.standard_grouping;
    if (!data.cache_dir.empty()) opts.cache_dir = data.cache_dir;
    return opts;
}

int run_features(const DatasetArgs& data, const std::vector<std::string>& audio_files,
                 const std::string& mode, const std::string& cache_dir) {
    const FeatureConfig fcfg = mode == "cqt" ? FeatureConfig::cqt() : FeatureConfig::hcqt();
    const fs::path cache = cache_dir.empty() ? fs::path("feature-cache") : fs::path(cache_dir);

    std::vector<std::pair<std::string, fs::path>> jobs;
    if (!audio_files.empty()) {
        for (const auto& f : audio_files) {
            jobs.emplace_back(fs::path(f).stem().string(), f);
        }
    } else {
        const DatasetLayout layout = data.layout();
        for (const auto& id : list_track_ids(layout)) {
            jobs.emplace_back(id, layout.audio_dir / (id + layout.audio_suffix));
        }
    }
    if (jobs.empty()) {
        std::cerr << "features: nothing to extract (give --audio files or --dataset)\n";
        return 1;
    }
    for (const auto& [id, path] : jobs) {
        const AudioClip clip = load_audio(path);
        const SpectralFeatures feats = cached_features(clip, fcfg, cache, id);
        std::cout << id << ": " << feats.n_channels << " x " << feats.n_bins << " x "
                  << feats.n_frames << " -> " << (cache / (id + ".feat")).string() << '\n';
    }
    return 0;
}

int run_train(const DatasetArgs& data, const TrainArgs& targs, int fold_index,
              const std::string& out_dir) {
    const TrainConfig cfg = finalize_train_config(targs);
    const DatasetOptions opts = make_dataset_options(data, cfg);
    const DatasetLayout layout = data.layout();

    const auto ids = list_track_ids(layout);
    const auto folds = player_folds(ids);
    if (fold_index < 0 || fold_index >= static_cast<int>(folds.size())) {
        std::cerr << "train: fold must be in [0, 5]\n";
        return 1;
    }
    const FoldSplit& split = folds[static_cast<std::size_t>(fold_index)];

    const auto load_set = [&](const std::vector<std::string>& names) {
        std::vector<TrackData> tracks;
        for (const auto& id : names) {
            std::cout << "loading " << id << '\n';
            tracks.push_back(load_dataset_track(layout, id, opts));
        }
        return tracks;
    };
    const auto train_set = load_set(split.train);
    const auto val_set = load_set(split.validation);
    const auto test_set = load_set(split.test);

    const FoldResult result = train_fold(fold_index, train_set, val_set, test_set, cfg,
                                         opts.strings, opts.features, out_dir);
    std::cout << "fold " << fold_index << ": best val F1 " << result.best_validation_f1
              << " at iteration " << result.best_iteration << "\ncheckpoint: "
              << result.best_checkpoint.string() << '\n';
    for (const auto& [family, prf] : result.test_metrics) {
        std::cout << family << ": P " << prf.precision << " R " << prf.recall << " F1 " << prf.f1
                  << '\n';
    }
    return 0;
}

int run_crossval(const DatasetArgs& data, const TrainArgs& targs, const std::string& out_dir,
                 const std::string& label) {
    const TrainConfig cfg = finalize_train_config(targs);
    const DatasetOptions opts = make_dataset_options(data, cfg);
    const CrossValidationResult result =
        cross_validate(data.layout(), opts, cfg, out_dir);
    const fs::path report = fs::path(out_dir) / "crossval_report.csv";
    write_crossval_report(report, label, result);
    std::cout << "report: " << report.string() << '\n';
    for (const auto& [family, prf] : result.aggregate) {
        std::cout << family << ": P " << prf.precision << " R " << prf.recall << " F1 " << prf.f1
                  << '\n';
    }
    return 0;
}

int run_evaluate(const std::string& predictions, const std::string& reference,
                 const std::string& track_id, const std::string& out_csv,
                 const std::string& out_json, const std::string& out_sweep) {
    StringConfig scfg;
    const auto records = read_note_records(predictions, scfg);

    TrackAnnotations ref;
    if (fs::path(reference).extension() == ".jams") {
        ref = load_jams_annotations(reference, scfg);
    } else {
        ref = annotations_from_records(read_note_records(reference, scfg));
    }

    const TrackAnnotations pred = annotations_from_records(records);
    double horizon = 0.0;
    for (const auto& n : pred.notes) horizon = std::max(horizon, n.offset);
    for (const auto& n : ref.notes) horizon = std::max(horizon, n.offset);
    const double hop = kHopLength / kSampleRate;
    const int n_frames = static_cast<int>(std::ceil(horizon / hop)) + 1;

    const FrameTablature pred_frames = frame_tablature_from_notes(pred.notes, n_frames);
    const FrameTablature ref_frames = frame_tablature_from_notes(ref.notes, n_frames);

    std::vector<MetricsRow> rows;
    rows.push_back({track_id, "frame_tablature", 0.0,
                    frame_tablature_prf(pred_frames, ref_frames)});
    rows.push_back({track_id, "frame_multipitch", 0.0,
                    frame_multipitch_prf(pred_frames, ref_frames, scfg)});
    rows.push_back({track_id, "note_string_dependent", 0.0,
                    note_prf(pred.notes, ref.notes, true)});
    rows.push_back({track_id, "note_string_agnostic", 0.0,
                    note_prf(pred.notes, ref.notes, false)});

    const PitchGrid pred_grid = pitch_grid_from_observations(pred.observations, n_frames);
    const PitchGrid ref_grid = pitch_grid_from_observations(ref.observations, n_frames);
    const ToleranceSweep sweep =
        continuous_mpe_sweep(pred_grid, ref_grid, default_tolerance_grid());
    for (std::size_t i = 0; i < sweep.tolerances.size(); ++i) {
        rows.push_back({track_id, "continuous_mpe_string_dependent", sweep.tolerances[i],
                        sweep.string_dependent[i]});
        rows.push_back({track_id, "continuous_mpe_string_agnostic", sweep.tolerances[i],
                        sweep.string_agnostic[i]});
    }

    if (!out_csv.empty()) write_metrics_csv(out_csv, rows);
    if (!out_json.empty()) write_metrics_summary_json(out_json, rows);
    if (!out_sweep.empty()) write_sweep_json(out_sweep, track_id, sweep);
    for (const auto& row : rows) {
        std::cout << row.family;
        if (row.tolerance > 0) std::cout << " @" << row.tolerance;
        std::cout << ": P " << row.scores.precision << " R " << row.scores.recall << " F1 "
                  << row.scores.f1 << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"guitar tablature transcription with continuous pitch contours"};
    app.require_subcommand(1);
    app.set_config("--config", "", "declarative key=value configuration file");
    app.allow_config_extras(CLI::config_extras_mode::ignore);

    DatasetArgs data;
    TrainArgs targs;

    // features
    auto* features_cmd = app.add_subcommand("features", "extract and cache spectral features");
    std::vector<std::string> feature_audio;
    std::string feature_mode = "hcqt";
    std::string feature_cache;
    add_dataset_options(features_cmd, data);
    features_cmd->add_option("--audio", feature_audio, "individual audio files");
    features_cmd->add_option("--mode", feature_mode, "hcqt | cqt")->capture_default_str()
->check(CLI::IsMember({"hcqt", "cqt"}));
    features_cmd->add_option("--out-cache", feature_cache, "cache directory")->capture_default_str();

    // train
    auto* train_cmd = app.add_subcommand("train", "train a single cross-validation fold");
    int fold_index = 0;
    std::string train_out = "runs";
    add_dataset_options(train_cmd, data);
    add_train_options(train_cmd, targs);
    train_cmd->add_option("--fold", fold_index, "fold index (0-5)")->capture_default_str();
    train_cmd->add_option("--out", train_out, "output directory")->capture_default_str();

    // crossval
    auto* crossval_cmd = app.add_subcommand("crossval", "run six-fold cross-validation");
    std::string crossval_out = "runs";
    std::string crossval_label = "default";
    add_dataset_options(crossval_cmd, data);
    add_train_options(crossval_cmd, targs);
    crossval_cmd->add_option("--out", crossval_out, "output directory")->capture_default_str();
    crossval_cmd->add_option("--label", crossval_label, "experiment label for the report")->capture_default_str();

    // transcribe
    auto* transcribe_cmd = app.add_subcommand("transcribe", "transcribe one audio file");
    std::string tr_audio, tr_checkpoint, tr_out = "transcription.jsonl";
    bool tr_grid = false;
    transcribe_cmd->add_option("--audio", tr_audio, "input WAV/FLAC file")->required();
    transcribe_cmd->add_option("--checkpoint", tr_checkpoint, "model checkpoint")->required();
    transcribe_cmd->add_option("--out", tr_out, "output JSON-lines path")->capture_default_str();
    transcribe_cmd->add_flag("--grid", tr_grid, "also export the binary frame grid");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a transcription against a reference");
    std::string ev_pred, ev_ref, ev_track = "track", ev_csv, ev_json, ev_sweep;
    eval_cmd->add_option("--predictions", ev_pred, "predicted notes (JSON lines)")->required();
    eval_cmd->add_option("--reference", ev_ref, "reference (.jams or JSON lines)")->required();
    eval_cmd->add_option("--track-id", ev_track, "track id for the CSV rows")->capture_default_str();
    eval_cmd->add_option("--out-csv", ev_csv, "per-track metrics CSV");
    eval_cmd->add_option("--out-json", ev_json, "aggregate summary JSON");
    eval_cmd->add_option("--out-sweep", ev_sweep, "tolerance sweep JSON (for the plot command)");

    // plot
    auto* plot_cmd = app.add_subcommand("plot", "render tolerance sweeps to SVG");
    std::vector<std::string> plot_sweeps;
    std::string plot_out = "sweep.svg";
    plot_cmd->add_option("--sweep", plot_sweeps, "sweep JSON files")->required();
    plot_cmd->add_option("--out", plot_out, "output SVG path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (features_cmd->parsed()) {
            return run_features(data, feature_audio, feature_mode, feature_cache);
        }
        if (train_cmd->parsed()) {
            return run_train(data, targs, fold_index, train_out);
        }
        if (crossval_cmd->parsed()) {
            return run_crossval(data, targs, crossval_out, crossval_label);
        }
        if (transcribe_cmd->parsed()) {
            transcribe_file(tr_audio, tr_checkpoint, tr_out, tr_grid);
            std::cout << "wrote " << tr_out << '\n';
            return 0;
        }
        if (eval_cmd->parsed()) {
            return run_evaluate(ev_pred, ev_ref, ev_track, ev_csv, ev_json, ev_sweep);
        }
        if (plot_cmd->parsed()) {
            std::vector<std::pair<std::string, ToleranceSweep>> sweeps;
            for (const auto& path : plot_sweeps) sweeps.push_back(read_sweep_json(path));
            plot_tolerance_curves(sweeps, plot_out);
            std::cout << "wrote " << plot_out << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
