#include "frettrace/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "frettrace/common.hpp"
#include "frettrace/flac_reader.hpp"

namespace frettrace {

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot open audio file: " + path.string());
    }
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

RawAudio parse_wav(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw std::runtime_error("not a RIFF/WAVE file: " + name);
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const std::uint8_t* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = le32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + len > bytes.size()) {
            throw std::runtime_error("truncated WAV chunk in " + name);
        }
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16) throw std::runtime_error("short fmt chunk in " + name);
            format = le16(bytes.data() + body);
            channels = le16(bytes.data() + body + 2);
            sample_rate = le32(bytes.data() + body + 4);
            bits = le16(bytes.data() + body + 14);
            if (format == 0xFFFE && len >= 40) {
                format = le16(bytes.data() + body + 24);  // extensible sub-format
            }
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = len;
        }
        pos = body + len + (len & 1);  // chunks are word aligned
    }

    if (data == nullptr || channels == 0 || sample_rate == 0) {
        throw std::runtime_error("WAV file missing fmt/data chunks: " + name);
    }

    const bool is_float = format == 3;
    if (format != 1 && !is_float) {
        throw std::runtime_error("unsupported WAV codec (only PCM/float): " + name);
    }

    const std::size_t bytes_per_sample = bits / 8;
    if (bytes_per_sample == 0 || (is_float && bits != 32) ||
        (!is_float && bits != 16 && bits != 24 && bits != 32)) {
        throw std::runtime_error("unsupported WAV bit depth " + std::to_string(bits) +
                                 " in " + name);
    }
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t n_frames = data_len / frame_bytes;

    RawAudio raw;
    raw.sample_rate = sample_rate;
    raw.channels.assign(channels, std::vector<float>(n_frames));
    for (std::size_t i = 0; i < n_frames; ++i) {
        for (std::uint16_t c = 0; c < channels; ++c) {
            const std::uint8_t* p = data + i * frame_bytes + c * bytes_per_sample;
            float v = 0.f;
            if (is_float) {
                std::uint32_t u = le32(p);
                std::memcpy(&v, &u, 4);
            } else if (bits == 16) {
                v = static_cast<float>(static_cast<std::int16_t>(le16(p))) / 32768.f;
            } else if (bits == 24) {
                std::int32_t s = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
                if (s & 0x800000) s |= ~0xFFFFFF;
                v = static_cast<float>(s) / 8388608.f;
            } else {  // 32-bit PCM
                v = static_cast<float>(static_cast<std::int32_t>(le32(p))) / 2147483648.f;
            }
            raw.channels[c][i] = v;
        }
    }
    return raw;
}

RawAudio parse_flac(const std::vector<std::uint8_t>& bytes) {
    const flac::Decoded d = flac::decode(bytes);
    const float scale = 1.f / static_cast<float>(std::int64_t(1) << (d.bits_per_sample - 1));
    RawAudio raw;
    raw.sample_rate = d.sample_rate;
    raw.channels.resize(d.channels.size());
    for (std::size_t c = 0; c < d.channels.size(); ++c) {
        raw.channels[c].resize(d.channels[c].size());
        for (std::size_t i = 0; i < d.channels[c].size(); ++i) {
            raw.channels[c][i] = static_cast<float>(d.channels[c][i]) * scale;
        }
    }
    return raw;
}

}  // namespace

RawAudio read_audio_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "fLaC", 4) == 0) {
        return parse_flac(bytes);
    }
    return parse_wav(bytes, path.string());
}

std::vector<float> downmix_to_mono(const RawAudio& raw) {
    if (raw.channels.empty()) return {};
    if (raw.channels.size() == 1) return raw.channels[0];
    std::size_t n = 0;
    for (const auto& c : raw.channels) n = std::max(n, c.size());
    std::vector<float> mono(n, 0.f);
    const float inv = 1.f / static_cast<float>(raw.channels.size());
    for (const auto& c : raw.channels) {
        for (std::size_t i = 0; i < c.size(); ++i) mono[i] += c[i] * inv;
    }
    return mono;
}

std::vector<float> resample(const std::vector<float>& in, double in_rate, double out_rate) {
    if (in_rate <= 0 || out_rate <= 0) {
        throw std::invalid_argument("resample: rates must be positive");
    }
    if (in_rate == out_rate || in.empty()) return in;

    constexpr int kHalfTaps = 48;
    const double ratio = in_rate / out_rate;
    const double cutoff = std::min(1.0, 1.0 / ratio);  // fraction of input Nyquist
    const std::size_t n_out =
        static_cast<std::size_t>(std::ceil(static_cast<double>(in.size()) / ratio));

    std::vector<float> out(n_out);
    const auto windowed_sinc = [&](double t) {
        // Hann-windowed sinc, zero outside +-kHalfTaps input samples
        const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * t / kHalfTaps));
        if (t == 0.0) return cutoff * w;
        const double a = std::numbers::pi * cutoff * t;
        return cutoff * w * std::sin(a) / a;
    };

    for (std::size_t n = 0; n < n_out; ++n) {
        const double center = static_cast<double>(n) * ratio;
        const long k0 = static_cast<long>(std::ceil(center)) - kHalfTaps;
        const long k1 = static_cast<long>(std::floor(center)) + kHalfTaps;
        double acc = 0.0;
        for (long k = std::max(0L, k0); k <= std::min<long>(in.size() - 1, k1); ++k) {
            acc += in[static_cast<std::size_t>(k)] * windowed_sinc(static_cast<double>(k) - center);
        }
        out[n] = static_cast<float>(acc);
    }
    return out;
}

AudioClip load_audio(const std::filesystem::path& path) {
    const RawAudio raw = read_audio_file(path);
    std::vector<float> mono = downmix_to_mono(raw);
    mono = resample(mono, raw.sample_rate, kSampleRate);
    for (float v : mono) {
        if (!std::isfinite(v)) {
            throw std::runtime_error("non-finite sample in " + path.string());
        }
    }
    return AudioClip{std::move(mono), kSampleRate};
}

AudioClip make_clip(std::vector<float> samples) {
    return AudioClip{std::move(samples), kSampleRate};
}

void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write WAV file: " + path.string());

    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
    const auto put16 = [&](std::uint16_t v) {
        char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
        f.write(b, 2);
    };
    const auto put32 = [&](std::uint32_t v) {
        char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
        f.write(b, 4);
    };

    f.write("RIFF", 4);
    put32(36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put32(16);
    put16(1);  // PCM
    put16(1);  // mono
    put32(static_cast<std::uint32_t>(sample_rate));
    put32(static_cast<std::uint32_t>(sample_rate) * 2);
    put16(2);
    put16(16);
    f.write("data", 4);
    put32(data_len);
    for (float v : samples) {
        const float c = std::clamp(v, -1.f, 1.f);
        put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(
            std::lround(c * 32767.f))));
    }
}

}  // namespace frettrace
