#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "frettrace/audio.hpp"

namespace frettrace {

enum class FeatureMode { kHcqt, kCqt };

struct FeatureConfig {
    int hop_length = 512;
    int bins_per_semitone = 3;
    int n_octaves = 4;
    std::vector<double> base_frequencies;  // Hz, one per channel
    FeatureMode mode = FeatureMode::kHcqt;

    /// 6 channels at harmonics {0.5, 1, 2, 3, 4, 5} of E2 (MIDI 40),
    /// 4 octaves with 3 bins per semitone each.
    static FeatureConfig hcqt();

    /// Single channel at C1 (MIDI 24), 8 octaves with 2 bins per semitone.
    static FeatureConfig cqt();

    int bins_per_octave() const { return 12 * bins_per_semitone; }
    int n_bins() const { return bins_per_octave() * n_octaves; }
    int n_channels() const { return static_cast<int>(base_frequencies.size()); }

    void validate() const;
    bool operator==(const FeatureConfig&) const = default;
};

/// Multi-channel time-frequency magnitude block, dB-scaled and min-max
/// normalized to [0,1] per channel. Layout: [channel][bin][frame].
struct SpectralFeatures {
    std::vector<float> magnitudes;
    int n_channels = 0;
    int n_bins = 0;
    int n_frames = 0;
    std::vector<double> frame_times;  // seconds, strictly increasing
    FeatureConfig config;

    float at(int channel, int bin, int frame) const {
        return magnitudes[(static_cast<std::size_t>(channel) * n_bins + bin) * n_frames +
                          frame];
    }
    float& at(int channel, int bin, int frame) {
        return magnitudes[(static_cast<std::size_t>(channel) * n_bins + bin) * n_frames +
                          frame];
    }
};

/// times[i] = i * hop_length / 22050.
std::vector<double> frame_times(std::size_t n_frames, const FeatureConfig& cfg);

/// Single-channel constant-Q transform (the ablation feature set).
/// Output block is 1 x n_bins x ceil(len/hop). Rejects audio shorter than
/// the reflect-padding of the longest analysis window allows.
SpectralFeatures compute_cqt(const AudioClip& clip, const FeatureConfig& cfg);

/// Harmonically stacked CQT: one channel per base frequency, all sharing
/// the frame grid. Output block is 6 x n_bins x ceil(len/hop).
SpectralFeatures compute_hcqt(const AudioClip& clip, const FeatureConfig& cfg);

/// Dispatches on cfg.mode.
SpectralFeatures compute_features(const AudioClip& clip, const FeatureConfig& cfg);

/// Hash of the audio content plus every parameter that affects the output.
std::uint64_t feature_content_hash(const AudioClip& clip, const FeatureConfig& cfg);

/// One cache file per recording; load returns nothing when the stored
/// content hash does not match (stale parameters or different audio).
void save_feature_cache(const std::filesystem::path& path, const SpectralFeatures& feats,
                        std::uint64_t content_hash);
std::optional<SpectralFeatures> load_feature_cache(const std::filesystem::path& path,
                                                   std::uint64_t expected_hash);

/// Computes features or loads them from `cache_dir/<track_id>.feat`.
SpectralFeatures cached_features(const AudioClip& clip, const FeatureConfig& cfg,
                                 const std::filesystem::path& cache_dir,
                                 const std::string& track_id);

}  // namespace frettrace
