#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "frettrace/audio.hpp"
#include "frettrace/common.hpp"
#include "frettrace/flac_reader.hpp"
#include "support/flac_encode.hpp"

using namespace frettrace;
namespace fs = std::filesystem;

namespace {

std::vector<float> sine(double freq, double seconds, double rate, double amp = 0.5) {
    std::vector<float> v(static_cast<std::size_t>(seconds * rate));
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = static_cast<float>(
            amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate));
    }
    return v;
}

/// Amplitude of a frequency component via the Goertzel recurrence.
double goertzel_amplitude(const std::vector<float>& x, double freq, double rate) {
    const double w = 2.0 * std::numbers::pi * freq / rate;
    const double c = 2.0 * std::cos(w);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (float v : x) {
        s0 = v + c * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    const double re = s1 - s2 * std::cos(w);
    const double im = s2 * std::sin(w);
    return 2.0 * std::hypot(re, im) / static_cast<double>(x.size());
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("midi/hz conversions") {
    CHECK(midi_to_hz(69.0) == doctest::Approx(440.0));
    CHECK(midi_to_hz(40.0) == doctest::Approx(82.4069).epsilon(1e-5));
    CHECK(hz_to_midi(midi_to_hz(52.3)) == doctest::Approx(52.3).epsilon(1e-10));
    CHECK_THROWS_AS(hz_to_midi(0.0), std::domain_error);
}

TEST_CASE("wav round trip at 16 bits") {
    const auto path = temp_file("frettrace_rt.wav");
    const auto samples = sine(440.0, 0.25, 22050.0);
    write_wav(path, samples, 22050);
    const RawAudio raw = read_audio_file(path);
    REQUIRE(raw.channels.size() == 1);
    CHECK(raw.sample_rate == 22050.0);
    REQUIRE(raw.channels[0].size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); i += 97) {
        CHECK(raw.channels[0][i] == doctest::Approx(samples[i]).epsilon(1e-3));
    }
    fs::remove(path);
}

TEST_CASE("wav reader rejects garbage") {
    const auto path = temp_file("frettrace_bad.wav");
    std::ofstream(path) << "this is not audio";
    CHECK_THROWS_AS(read_audio_file(path), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("flac decode: verbatim, constant and fixed subframes") {
    std::vector<std::int32_t> x(8192);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<std::int32_t>(
            12000.0 * std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(i) / 22050.0));
    }

    for (auto kind : {flac_encode::SubframeKind::kVerbatim, flac_encode::SubframeKind::kFixed2}) {
        const auto bytes = flac_encode::encode({x}, 22050, kind);
        const flac::Decoded d = flac::decode(bytes);
        CHECK(d.sample_rate == 22050);
        CHECK(d.bits_per_sample == 16);
        REQUIRE(d.channels.size() == 1);
        REQUIRE(d.channels[0].size() == x.size());
        CHECK(d.channels[0] == x);
    }

    std::vector<std::int32_t> flat(4096, -321);
    const auto bytes = flac_encode::encode({flat}, 22050, flac_encode::SubframeKind::kConstant);
    const flac::Decoded d = flac::decode(bytes);
    CHECK(d.channels[0] == flat);
}

TEST_CASE("flac decode: left/side stereo decorrelation") {
    std::vector<std::int32_t> left(4096), right(4096);
    for (std::size_t i = 0; i < left.size(); ++i) {
        left[i] = static_cast<std::int32_t>(
            9000.0 * std::sin(2.0 * std::numbers::pi * 220.0 * static_cast<double>(i) / 22050.0));
        right[i] = static_cast<std::int32_t>(
            7000.0 * std::sin(2.0 * std::numbers::pi * 330.0 * static_cast<double>(i) / 22050.0));
    }
    const auto bytes = flac_encode::encode({left, right}, 22050,
                                           flac_encode::SubframeKind::kVerbatim, 4096, true);
    const flac::Decoded d = flac::decode(bytes);
    REQUIRE(d.channels.size() == 2);
    CHECK(d.channels[0] == left);
    CHECK(d.channels[1] == right);
}

TEST_CASE("load_audio ingests FLAC end to end with downmix") {
    std::vector<std::int32_t> left(4096, 8000), right(4096, -8000);
    const auto bytes =
        flac_encode::encode({left, right}, 22050, flac_encode::SubframeKind::kVerbatim);
    const auto path = temp_file("frettrace_mix.flac");
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));

    const AudioClip clip = load_audio(path);
    CHECK(clip.sample_rate == 22050.0);
    REQUIRE(clip.samples.size() == left.size());
    for (std::size_t i = 0; i < clip.samples.size(); i += 511) {
        CHECK(clip.samples[i] == doctest::Approx(0.0).epsilon(1e-6));  // downmix average
    }
    fs::remove(path);
}

TEST_CASE("resampler halves 44100 Hz audio and keeps the tone") {
    const auto in = sine(440.0, 0.5, 44100.0);
    const auto out = resample(in, 44100.0, 22050.0);
    CHECK(out.size() == in.size() / 2);
    CHECK(goertzel_amplitude(out, 440.0, 22050.0) == doctest::Approx(0.5).epsilon(0.03));
    // spot: no spurious energy near an unrelated bin
    CHECK(goertzel_amplitude(out, 2000.0, 22050.0) < 0.02);
}

TEST_CASE("resampler is the identity at matched rates") {
    const auto in = sine(100.0, 0.1, 22050.0);
    CHECK(resample(in, 22050.0, 22050.0) == in);
}

TEST_CASE("resampler upsamples without aliasing the band edge") {
    const auto in = sine(300.0, 0.3, 22050.0);
    const auto out = resample(in, 22050.0, 44100.0);
    CHECK(out.size() == in.size() * 2);
    CHECK(goertzel_amplitude(out, 300.0, 44100.0) == doctest::Approx(0.5).epsilon(0.03));
}
