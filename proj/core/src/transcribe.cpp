#include "frettrace/transcribe.hpp"

#include <cmath>
#include <stdexcept>

#include "frettrace/adam.hpp"

namespace frettrace {

TranscriptionResult transcribe_clip(const AudioClip& clip, TabModel& model,
                                    const FeatureConfig& fcfg, const LossConfig& lcfg,
                                    const StringConfig& scfg, const DecodingConfig& dcfg) {
    if (std::lround(clip.sample_rate) != std::lround(kSampleRate)) {
        throw std::invalid_argument("transcribe_clip: audio must be resampled to 22050 Hz");
    }
    if (model.config().in_channels != fcfg.n_channels() ||
        model.config().n_bins != fcfg.n_bins()) {
        throw std::invalid_argument(
            "transcribe_clip: checkpoint feature mode does not match the feature config");
    }

    DecodingConfig cfg = dcfg;
    cfg.sigmoid_deviation = lcfg.deviation_loss == DeviationLossKind::kMeanSquaredError;

    const SpectralFeatures feats = compute_features(clip, fcfg);
    const HeadLogitsBatch logits = infer_frames(model, feats);

    TranscriptionResult result;
    result.frame_times = feats.frame_times;
    result.frame_tablature = threshold_tablature(logits, scfg, cfg);
    const OnsetGrid onsets = threshold_onsets(logits, scfg, cfg);
    result.notes = model.config().onset_head
                       ? decode_notes(result.frame_tablature, onsets, feats.frame_times, scfg, cfg)
                       : decode_notes_clustered(result.frame_tablature, feats.frame_times, scfg,
                                                cfg);
    result.contours = attach_contours(result.notes, result.frame_tablature, feats.frame_times);
    return result;
}

void transcribe_file(const std::filesystem::path& audio_path,
                     const std::filesystem::path& checkpoint_path,
                     const std::filesystem::path& output_path, bool export_frame_grid) {
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
    const AudioClip clip = load_audio(audio_path);

    StringConfig scfg;
    scfg.n_frets = ckpt.meta.model.n_fret_classes - 1;
    scfg.max_deviation_r = ckpt.meta.loss.r;

    const TranscriptionResult result =
        transcribe_clip(clip, *ckpt.model, ckpt.meta.features, ckpt.meta.loss, scfg);
    write_transcription(output_path, result);
    if (export_frame_grid) {
        auto grid_path = output_path;
        grid_path.replace_extension(".grid");
        write_frame_grid(grid_path, result.frame_tablature, result.frame_times,
                         ckpt.meta.loss.r);
    }
}

}  // namespace frettrace
