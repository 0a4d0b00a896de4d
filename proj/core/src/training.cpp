#include "frettrace/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "frettrace/common.hpp"
#include "frettrace/continuous_bernoulli.hpp"

namespace frettrace {

using nlohmann::json;

void TrainConfig::validate() const {
    if (iterations <= 0 || batch_size <= 0 || sequence_frames <= 0 ||
        lr_halving_period <= 0 || checkpoint_interval <= 0) {
        throw std::invalid_argument("TrainConfig: counts and periods must be positive");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    }
    loss.validate();
}

double learning_rate_at(const TrainConfig& cfg, std::int64_t iteration) {
    const auto halvings = iteration / cfg.lr_halving_period;
    return cfg.learning_rate * std::exp2(-static_cast<double>(halvings));
}

// ---------------------------------------------------------------------------
// track data

namespace {

/// The grouping shipped with the annotations: every observation goes to the
/// same-string note whose span contains it, nothing is discarded and no
/// boundary is realigned.
std::vector<PitchContour> provided_grouping(const std::vector<StampedNote>& notes,
                                            const std::vector<PitchObservation>& obs) {
    std::vector<PitchContour> contours(notes.size());
    for (std::size_t i = 0; i < notes.size(); ++i) contours[i].note_id = i;
    for (const PitchObservation& o : obs) {
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < notes.size(); ++i) {
            const StampedNote& n = notes[i];
            if (n.string != o.string) continue;
            if (o.time < n.onset || o.time > n.offset) continue;
            const double dist = std::abs(o.time - n.onset);
            if (dist < best_dist) {
                best = static_cast<int>(i);
                best_dist = dist;
            }
        }
        if (best >= 0) {
            contours[static_cast<std::size_t>(best)].times.push_back(o.time);
            contours[static_cast<std::size_t>(best)].pitches.push_back(o.pitch);
        }
    }
    return contours;
}

}  // namespace

TrackData build_track_data(std::string id, const AudioClip& audio,
                           const TrackAnnotations& annotations, const DatasetOptions& opts) {
    TrackData track;
    track.id = std::move(id);
    track.features = opts.cache_dir.empty()
                         ? compute_features(audio, opts.features)
                         : cached_features(audio, opts.features, opts.cache_dir, track.id);
    track.original_notes = annotations.notes;
    track.observations = annotations.observations;

    std::vector<StampedNote> notes = annotations.notes;
    std::vector<PitchContour> contours;
    if (opts.standard_grouping) {
        contours = provided_grouping(notes, annotations.observations);
    } else {
        contours = cluster_group_contours(notes, annotations.observations, opts.strings,
                                          opts.grouping);
        std::tie(notes, contours) = realign_note_boundaries(notes, contours);
    }
    track.targets =
        generate_targets(notes, contours, track.features.n_frames, opts.strings,
                         static_cast<double>(opts.features.hop_length) / kSampleRate);
    return track;
}

TrackData build_fixture_track(std::string id, const std::vector<FixtureNote>& spec,
                              const DatasetOptions& opts) {
    const Fixture fx = synthesize_fixture(spec, opts.strings);
    TrackAnnotations ann{fx.notes, fx.observations};
    return build_track_data(std::move(id), fx.audio, ann, opts);
}

std::vector<std::string> list_track_ids(const DatasetLayout& layout) {
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(layout.annotation_dir)) {
        if (entry.path().extension() == ".jams") {
            ids.push_back(entry.path().stem().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

TrackData load_dataset_track(const DatasetLayout& layout, const std::string& id,
                             const DatasetOptions& opts) {
    const auto annotation = layout.annotation_dir / (id + ".jams");
    const auto audio = layout.audio_dir / (id + layout.audio_suffix);
    auto [clip, ann] = load_guitarset_track(annotation, audio, opts.strings);
    return build_track_data(id, clip, ann, opts);
}

// ---------------------------------------------------------------------------
// batch sampling

std::vector<SequenceSample> sample_batch(const std::vector<const TrackData*>& tracks,
                                         const TrainConfig& cfg, std::mt19937_64& rng) {
    if (tracks.empty()) {
        throw std::invalid_argument("sample_batch: empty training set");
    }
    std::vector<SequenceSample> batch;
    batch.reserve(tracks.size());
    for (const TrackData* track : tracks) {
        const int n_frames = track->features.n_frames;
        const int seq = cfg.sequence_frames;
        int start = 0;
        if (n_frames > seq) {
            std::uniform_int_distribution<int> dist(0, n_frames - seq);
            start = dist(rng);
        }

        SequenceSample sample;
        sample.track_id = track->id;
        sample.targets = track->targets.slice(start, seq);

        const SpectralFeatures& feats = track->features;
        sample.windows = Tensor(seq, feats.n_channels, feats.n_bins, 9);
        const int real = std::min(seq, n_frames - start);
        if (real > 0) {
            Tensor inner = windowize_range(feats, start, real);
            std::copy(inner.v.begin(), inner.v.end(), sample.windows.v.begin());
        }
        // frames past the track end stay silent (all-zero windows/targets)
        batch.push_back(std::move(sample));
    }
    return batch;
}

// ---------------------------------------------------------------------------
// one optimizer step

namespace {

std::vector<float> logistic_all(const std::vector<float>& logits) {
    std::vector<float> act(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) act[i] = logistic(logits[i]);
    return act;
}

}  // namespace

StepStats train_step(TabModel& model, AdamState& adam, const std::vector<SequenceSample>& batch,
                     const TrainConfig& cfg, double lr, std::mt19937_64& dropout_rng) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    const ModelConfig& mc = model.config();
    const std::size_t n_strings = static_cast<std::size_t>(mc.n_strings);
    const std::size_t n_classes = static_cast<std::size_t>(mc.n_fret_classes);
    const bool mse = cfg.loss.deviation_loss == DeviationLossKind::kMeanSquaredError;
    const float inv_nseq = 1.f / static_cast<float>(batch.size());
    const float discrete_scale =
        static_cast<float>((mse ? 1.0 : 1.0 / cfg.loss.gamma) * inv_nseq);
    const float dev_scale = static_cast<float>((mse ? cfg.loss.gamma : 1.0) * inv_nseq);

    StepStats stats;
    stats.lr = lr;

    for (const SequenceSample& sample : batch) {
        const std::size_t n_frames = static_cast<std::size_t>(sample.windows.n);
        HeadLogitsBatch logits = model.forward(sample.windows, /*training=*/true, dropout_rng);

        HeadLogitsBatch grads;
        grads.n = logits.n;
        grads.n_pairs = logits.n_pairs;
        grads.tablature.assign(logits.tablature.size(), 0.f);

        const std::span<const float> tab_logits(logits.tablature);
        const std::span<const float> act_targets(sample.targets.activity);

        stats.losses.tablature += loss_binary_pairs(tab_logits, act_targets, n_frames) * inv_nseq;
        loss_binary_pairs_grad(tab_logits, act_targets, n_frames, discrete_scale,
                               std::span<float>(grads.tablature));

        if (cfg.loss.lambda_inh != 0.0) {
            const std::vector<float> act = logistic_all(logits.tablature);
            stats.losses.inhibition +=
                loss_inhibition(std::span<const float>(act), n_frames, n_strings, n_classes) *
                inv_nseq;
            std::vector<float> dact(act.size(), 0.f);
            loss_inhibition_grad(std::span<const float>(act), n_frames, n_strings, n_classes,
                                 static_cast<float>(cfg.loss.lambda_inh) * discrete_scale,
                                 std::span<float>(dact));
            for (std::size_t i = 0; i < act.size(); ++i) {
                grads.tablature[i] += dact[i] * act[i] * (1.f - act[i]);
            }
        }

        if (mc.onset_head) {
            grads.onset.assign(logits.onset.size(), 0.f);
            const std::span<const float> ons_logits(logits.onset);
            const std::span<const float> ons_targets(sample.targets.onsets);
            stats.losses.onsets += loss_binary_pairs(ons_logits, ons_targets, n_frames) * inv_nseq;
            loss_binary_pairs_grad(ons_logits, ons_targets, n_frames, discrete_scale,
                                   std::span<float>(grads.onset));
        }

        if (mc.deviation_head) {
            grads.deviation.assign(logits.deviation.size(), 0.f);
            const std::span<const float> dev_logits(logits.deviation);
            const std::span<const float> dev_targets(sample.targets.deviation_x);
            std::vector<float> all_ones;
            std::span<const float> mask(sample.targets.deviation_mask);
            if (cfg.loss.dev_mask == DeviationMaskMode::kAll) {
                all_ones.assign(dev_logits.size(), 1.f);
                mask = all_ones;
            }
            const auto kind = cfg.loss.deviation_loss;
            stats.losses.deviation += loss_deviation(dev_logits, dev_targets, mask, kind) * inv_nseq;
            loss_deviation_grad(dev_logits, dev_targets, mask, kind, dev_scale,
                                std::span<float>(grads.deviation));
        }

        model.backward(grads);
    }

    stats.losses.total = loss_total(stats.losses.tablature, stats.losses.inhibition,
                                    stats.losses.onsets, stats.losses.deviation, cfg.loss);
    if (!std::isfinite(stats.losses.total)) {
        throw std::runtime_error("training diverged: non-finite loss");
    }

    adam.step(model.params(), lr);
    model.zero_grad();
    return stats;
}

// ---------------------------------------------------------------------------
// evaluation

TrackEvaluation evaluate_track(TabModel& model, const TrackData& track,
                               const StringConfig& scfg, const TrainConfig& cfg) {
    DecodingConfig dcfg;
    dcfg.sigmoid_deviation = cfg.loss.deviation_loss == DeviationLossKind::kMeanSquaredError;

    const HeadLogitsBatch logits = infer_frames(model, track.features);
    const FrameTablature pred = threshold_tablature(logits, scfg, dcfg);
    const OnsetGrid onsets = threshold_onsets(logits, scfg, dcfg);
    const std::vector<StampedNote> pred_notes =
        model.config().onset_head
            ? decode_notes(pred, onsets, track.features.frame_times, scfg, dcfg)
            : decode_notes_clustered(pred, track.features.frame_times, scfg, dcfg);

    const FrameTablature ref =
        frame_tablature_from_notes(track.original_notes, track.features.n_frames);

    TrackEvaluation ev;
    ev.frame_tablature = frame_tablature_prf(pred, ref);
    ev.frame_multipitch = frame_multipitch_prf(pred, ref, scfg);
    ev.note_string_dependent = note_prf(pred_notes, track.original_notes, true);
    ev.note_string_agnostic = note_prf(pred_notes, track.original_notes, false);

    const PitchGrid pred_grid = pitch_grid_from_frames(pred, scfg);
    const PitchGrid ref_grid =
        pitch_grid_from_observations(track.observations, track.features.n_frames);
    ev.sweep = continuous_mpe_sweep(pred_grid, ref_grid, default_tolerance_grid());
    return ev;
}

double validation_frame_f1(TabModel& model, const std::vector<TrackData>& tracks,
                           const StringConfig& scfg) {
    if (tracks.empty()) return 0.0;
    double sum = 0.0;
    for (const TrackData& track : tracks) {
        const HeadLogitsBatch logits = infer_frames(model, track.features);
        const FrameTablature pred = threshold_tablature(logits, scfg, DecodingConfig{});
        const FrameTablature ref =
            frame_tablature_from_notes(track.original_notes, track.features.n_frames);
        sum += frame_tablature_prf(pred, ref).f1;
    }
    return sum / static_cast<double>(tracks.size());
}

// ---------------------------------------------------------------------------
// folds

FoldResult train_fold(int fold_index, const std::vector<TrackData>& train,
                      const std::vector<TrackData>& validation,
                      const std::vector<TrackData>& test, const TrainConfig& cfg,
                      const StringConfig& scfg, const FeatureConfig& fcfg,
                      const std::filesystem::path& out_dir) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("train_fold: no training tracks");
    std::filesystem::create_directories(out_dir);

    ModelConfig mcfg = ModelConfig::for_features(fcfg, scfg);
    mcfg.deviation_head = cfg.deviation_head;
    mcfg.onset_head = cfg.onset_head;
    TabModel model(mcfg);
    model.init(cfg.seed + static_cast<std::uint64_t>(fold_index));

    AdamState adam;
    adam.reset(model.params());

    std::mt19937_64 sample_rng(cfg.seed * 0x9E3779B97F4A7C15ULL +
                               static_cast<std::uint64_t>(fold_index));
    std::mt19937_64 dropout_rng(cfg.seed + 0x51ED270B7A2FULL +
                                static_cast<std::uint64_t>(fold_index));

    const auto log_path = out_dir / ("fold" + std::to_string(fold_index) + "_train_log.jsonl");
    std::ofstream log(log_path, std::ios::app);

    FoldResult result;
    result.fold = fold_index;

    std::vector<const TrackData*> order;
    for (const TrackData& t : train) order.push_back(&t);

    const auto checkpoint_path = [&](std::int64_t iter) {
        return out_dir / ("fold" + std::to_string(fold_index) + "_iter" + std::to_string(iter) +
                          ".ckpt");
    };

    for (std::int64_t iter = 0; iter < cfg.iterations; ++iter) {
        const double lr = learning_rate_at(cfg, iter);
        std::shuffle(order.begin(), order.end(), sample_rng);

        LossValues iteration_losses;
        std::size_t n_steps = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
            const std::size_t count =
                std::min<std::size_t>(cfg.batch_size, order.size() - pos);
            std::vector<const TrackData*> chunk(order.begin() + pos,
                                                order.begin() + pos + count);
            std::vector<SequenceSample> batch = sample_batch(chunk, cfg, sample_rng);
            StepStats stats;
            try {
                stats = train_step(model, adam, batch, cfg, lr, dropout_rng);
            } catch (const std::exception&) {
                save_checkpoint(checkpoint_path(-iter - 1), model, fcfg, cfg.loss, iter, &adam);
                log << json{{"iteration", iter}, {"event", "divergence"}}.dump() << '\n';
                throw;
            }
            iteration_losses.tablature += stats.losses.tablature;
            iteration_losses.inhibition += stats.losses.inhibition;
            iteration_losses.onsets += stats.losses.onsets;
            iteration_losses.deviation += stats.losses.deviation;
            iteration_losses.total += stats.losses.total;
            ++n_steps;
        }
        const double inv = 1.0 / static_cast<double>(n_steps);

        json entry = {{"iteration", iter},
                      {"lr", lr},
                      {"loss_total", iteration_losses.total * inv},
                      {"loss_tab", iteration_losses.tablature * inv},
                      {"loss_inh", iteration_losses.inhibition * inv},
                      {"loss_ons", iteration_losses.onsets * inv},
                      {"loss_dev", iteration_losses.deviation * inv}};

        const bool last = iter + 1 == cfg.iterations;
        if ((iter + 1) % cfg.checkpoint_interval == 0 || last) {
            const auto path = checkpoint_path(iter + 1);
            save_checkpoint(path, model, fcfg, cfg.loss, iter + 1, &adam);
            const std::vector<TrackData>& sel = validation.empty() ? train : validation;
            const double f1 = validation_frame_f1(model, sel, scfg);
            result.validation_history.emplace_back(iter + 1, f1);
            entry["val_f1"] = f1;
            if (result.best_iteration < 0 || f1 > result.best_validation_f1) {
                result.best_validation_f1 = f1;
                result.best_iteration = iter + 1;
                result.best_checkpoint = path;
            }
        }
        log << entry.dump() << '\n';
        log.flush();
    }

    if (!test.empty()) {
        LoadedCheckpoint best = load_checkpoint(result.best_checkpoint);
        ToleranceSweep sweep;
        sweep.tolerances = default_tolerance_grid();
        sweep.string_dependent.assign(sweep.tolerances.size(), PRF{});
        sweep.string_agnostic.assign(sweep.tolerances.size(), PRF{});
        const auto add_prf = [](PRF& acc, const PRF& x) {
            acc.precision += x.precision;
            acc.recall += x.recall;
            acc.f1 += x.f1;
        };
        std::map<std::string, PRF> sums;
        for (const TrackData& track : test) {
            const TrackEvaluation ev = evaluate_track(*best.model, track, scfg, cfg);
            add_prf(sums["frame_tablature"], ev.frame_tablature);
            add_prf(sums["frame_multipitch"], ev.frame_multipitch);
            add_prf(sums["note_string_dependent"], ev.note_string_dependent);
            add_prf(sums["note_string_agnostic"], ev.note_string_agnostic);
            for (std::size_t i = 0; i < sweep.tolerances.size(); ++i) {
                add_prf(sweep.string_dependent[i], ev.sweep.string_dependent[i]);
                add_prf(sweep.string_agnostic[i], ev.sweep.string_agnostic[i]);
            }
        }
        const double inv = 1.0 / static_cast<double>(test.size());
        for (auto& [name, prf] : sums) {
            result.test_metrics[name] =
                PRF{prf.precision * inv, prf.recall * inv, prf.f1 * inv};
        }
        for (std::size_t i = 0; i < sweep.tolerances.size(); ++i) {
            sweep.string_dependent[i] = PRF{sweep.string_dependent[i].precision * inv,
                                            sweep.string_dependent[i].recall * inv,
                                            sweep.string_dependent[i].f1 * inv};
            sweep.string_agnostic[i] = PRF{sweep.string_agnostic[i].precision * inv,
                                           sweep.string_agnostic[i].recall * inv,
                                           sweep.string_agnostic[i].f1 * inv};
        }
        result.test_sweep = sweep;
    }
    return result;
}

CrossValidationResult cross_validate(const DatasetLayout& layout, const DatasetOptions& dopts,
                                     const TrainConfig& cfg,
                                     const std::filesystem::path& out_dir) {
    const std::vector<std::string> ids = list_track_ids(layout);
    if (ids.empty()) {
        throw std::runtime_error("cross_validate: no .jams annotations under " +
                                 layout.annotation_dir.string());
    }
    std::unordered_map<std::string, TrackData> store;
    for (const auto& id : ids) {
        store.emplace(id, load_dataset_track(layout, id, dopts));
    }
    const std::vector<FoldSplit> folds = player_folds(ids);

    CrossValidationResult result;
    std::map<std::string, PRF> sums;
    for (const FoldSplit& split : folds) {
        const auto collect = [&](const std::vector<std::string>& names) {
            std::vector<TrackData> tracks;
            for (const auto& n : names) tracks.push_back(store.at(n));
            return tracks;
        };
        FoldResult fr = train_fold(split.fold, collect(split.train), collect(split.validation),
                                   collect(split.test), cfg, dopts.strings, dopts.features,
                                   out_dir);
        for (const auto& [name, prf] : fr.test_metrics) {
            sums[name].precision += prf.precision;
            sums[name].recall += prf.recall;
            sums[name].f1 += prf.f1;
        }
        result.folds.push_back(std::move(fr));
    }
    for (const auto& [name, prf] : sums) {
        const double inv = 1.0 / static_cast<double>(result.folds.size());
        result.aggregate[name] = PRF{prf.precision * inv, prf.recall * inv, prf.f1 * inv};
    }
    return result;
}

void write_crossval_report(const std::filesystem::path& path, const std::string& label,
                           const CrossValidationResult& result) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write crossval report: " + path.string());
    f << "experiment";
    static const char* kFamilies[] = {"frame_tablature", "frame_multipitch",
                                      "note_string_dependent", "note_string_agnostic"};
    for (const char* fam : kFamilies) {
        f << ',' << fam << "_p," << fam << "_r," << fam << "_f1";
    }
    f << '\n' << label;
    char buf[64];
    for (const char* fam : kFamilies) {
        const auto it = result.aggregate.find(fam);
        const PRF prf = it != result.aggregate.end() ? it->second : PRF{};
        std::snprintf(buf, sizeof(buf), ",%.3f,%.3f,%.3f", prf.precision, prf.recall, prf.f1);
        f << buf;
    }
    f << '\n';
}

}  // namespace frettrace
