#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace frettrace {

/// Mono audio at the pipeline sample rate (22050 Hz after ingestion).
struct AudioClip {
    std::vector<float> samples;  // amplitudes in [-1, 1]
    double sample_rate = 22050.0;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

/// Decoded audio as found on disk, before downmix/resampling.
struct RawAudio {
    std::vector<std::vector<float>> channels;
    double sample_rate = 0.0;
};

/// Reads a WAV (PCM 16/24/32-bit or float32) or FLAC file, dispatching on
/// the magic bytes. Throws std::runtime_error with a diagnostic on
/// malformed input.
RawAudio read_audio_file(const std::filesystem::path& path);

/// Averages channels into one.
std::vector<float> downmix_to_mono(const RawAudio& raw);

/// Windowed-sinc sample rate conversion.
std::vector<float> resample(const std::vector<float>& in, double in_rate, double out_rate);

/// Full ingestion: decode, downmix, resample to 22050 Hz, verify finiteness.
AudioClip load_audio(const std::filesystem::path& path);

/// Wraps samples already at 22050 Hz.
AudioClip make_clip(std::vector<float> samples);

/// Writes mono 16-bit PCM WAV (used by fixtures and tools).
void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate);

}  // namespace frettrace
