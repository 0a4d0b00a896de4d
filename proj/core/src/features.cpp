#include "frettrace/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "frettrace/common.hpp"
#include "frettrace/serialization.hpp"

namespace frettrace {

namespace {

constexpr std::uint32_t kCacheMagic = 0x46544146;  // "FTAF"
constexpr std::uint32_t kCacheVersion = 1;
constexpr double kAmin = 1e-10;          // dB floor
constexpr double kKernelSparsity = 1e-4;  // relative magnitude cutoff

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// FFTW plan creation is not thread safe; executions with per-call buffers are.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

fftw_plan r2c_plan(std::size_t n) {
    static std::map<std::size_t, fftw_plan> plans;
    std::lock_guard<std::mutex> lock(fftw_mutex());
    auto it = plans.find(n);
    if (it != plans.end()) return it->second;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans.emplace(n, p);
    return p;
}

struct SparseKernel {
    std::vector<int> index;
    std::vector<std::complex<double>> conj_value;
};

/// Frequency-domain kernels of one CQT channel, shared FFT size.
struct ChannelKernels {
    std::size_t n_fft = 0;
    std::vector<SparseKernel> bins;
};

ChannelKernels build_kernels(double base_hz, int n_bins, int bins_per_octave,
                             double sample_rate) {
    const double q = 1.0 / (std::exp2(1.0 / bins_per_octave) - 1.0);
    std::vector<double> freqs(n_bins);
    std::vector<std::size_t> lengths(n_bins);
    std::size_t max_len = 0;
    for (int k = 0; k < n_bins; ++k) {
        freqs[k] = base_hz * std::exp2(static_cast<double>(k) / bins_per_octave);
        if (freqs[k] >= sample_rate / 2.0) {
            throw std::invalid_argument("CQT bin frequency exceeds Nyquist: " +
                                        std::to_string(freqs[k]) + " Hz");
        }
        lengths[k] = static_cast<std::size_t>(std::ceil(q * sample_rate / freqs[k]));
        max_len = std::max(max_len, lengths[k]);
    }

    ChannelKernels out;
    out.n_fft = next_pow2(max_len);
    out.bins.resize(n_bins);

    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_complex* buf = fftw_alloc_complex(out.n_fft);
    fftw_complex* spec = fftw_alloc_complex(out.n_fft);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(out.n_fft), buf, spec, FFTW_FORWARD,
                                      FFTW_ESTIMATE);

    for (int k = 0; k < n_bins; ++k) {
        const std::size_t len = lengths[k];
        const std::size_t offset = (out.n_fft - len) / 2;
        std::memset(buf, 0, sizeof(fftw_complex) * out.n_fft);
        double window_sum = 0.0;
        for (std::size_t n = 0; n < len; ++n) {
            const double w =
                0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                      static_cast<double>(len)));
            window_sum += w;
        }
        for (std::size_t n = 0; n < len; ++n) {
            const double w =
                0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                      static_cast<double>(len)));
            const double phase = 2.0 * std::numbers::pi * freqs[k] *
                                 (static_cast<double>(n) - 0.5 * static_cast<double>(len)) /
                                 sample_rate;
            buf[offset + n][0] = w * std::cos(phase) / window_sum;
            buf[offset + n][1] = w * std::sin(phase) / window_sum;
        }
        fftw_execute_dft(plan, buf, spec);

        // keep only the significant positive-frequency coefficients
        double peak = 0.0;
        const std::size_t half = out.n_fft / 2;
        for (std::size_t j = 0; j <= half; ++j) {
            peak = std::max(peak, std::hypot(spec[j][0], spec[j][1]));
        }
        const double cutoff = peak * kKernelSparsity;
        for (std::size_t j = 0; j <= half; ++j) {
            const double mag = std::hypot(spec[j][0], spec[j][1]);
            if (mag >= cutoff) {
                out.bins[k].index.push_back(static_cast<int>(j));
                out.bins[k].conj_value.emplace_back(spec[j][0], -spec[j][1]);
            }
        }
    }

    fftw_destroy_plan(plan);
    fftw_free(buf);
    fftw_free(spec);
    return out;
}

long reflect_index(long i, long n) {
    // single-fold reflection without repeating the edge sample
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return i;
}

/// Raw (un-normalized) magnitudes of one channel: [bin][frame].
std::vector<double> channel_magnitudes(const AudioClip& clip, const ChannelKernels& kernels,
                                       int n_bins, int hop, std::size_t n_frames) {
    const long n = static_cast<long>(clip.samples.size());
    const long half = static_cast<long>(kernels.n_fft / 2);
    if (n <= half) {
        throw std::invalid_argument(
            "audio too short for CQT analysis: " + std::to_string(n) + " samples, need more than " +
            std::to_string(half) + " (half the longest analysis window)");
    }

    fftw_plan plan = r2c_plan(kernels.n_fft);
    std::vector<double> mags(static_cast<std::size_t>(n_bins) * n_frames);

    double* seg = fftw_alloc_real(kernels.n_fft);
    fftw_complex* spec = fftw_alloc_complex(kernels.n_fft / 2 + 1);
    for (std::size_t t = 0; t < n_frames; ++t) {
        const long center = static_cast<long>(t) * hop;
        for (long j = 0; j < static_cast<long>(kernels.n_fft); ++j) {
            seg[j] = clip.samples[static_cast<std::size_t>(
                reflect_index(center - half + j, n))];
        }
        fftw_execute_dft_r2c(plan, seg, spec);
        for (int k = 0; k < n_bins; ++k) {
            const SparseKernel& sk = kernels.bins[k];
            double re = 0.0, im = 0.0;
            for (std::size_t j = 0; j < sk.index.size(); ++j) {
                const double xr = spec[sk.index[j]][0];
                const double xi = spec[sk.index[j]][1];
                const double kr = sk.conj_value[j].real();
                const double ki = sk.conj_value[j].imag();
                re += xr * kr - xi * ki;
                im += xr * ki + xi * kr;
            }
            mags[static_cast<std::size_t>(k) * n_frames + t] =
                std::hypot(re, im) / static_cast<double>(kernels.n_fft);
        }
    }
    fftw_free(seg);
    fftw_free(spec);
    return mags;
}

/// Per-recording dB conversion followed by per-channel min-max to [0,1].
void normalize_channel(std::vector<double>& mags, float* out) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    for (auto& m : mags) {
        m = 20.0 * std::log10(std::max(m, kAmin));
        mn = std::min(mn, m);
        mx = std::max(mx, m);
    }
    const double range = mx - mn;
    for (std::size_t i = 0; i < mags.size(); ++i) {
        out[i] = range > 0.0 ? static_cast<float>((mags[i] - mn) / range) : 0.0f;
    }
}

}  // namespace

FeatureConfig FeatureConfig::hcqt() {
    FeatureConfig cfg;
    cfg.mode = FeatureMode::kHcqt;
    cfg.bins_per_semitone = 3;
    cfg.n_octaves = 4;
    const double e2 = midi_to_hz(40.0);
    for (double h : {0.5, 1.0, 2.0, 3.0, 4.0, 5.0}) {
        cfg.base_frequencies.push_back(h * e2);
    }
    return cfg;
}

FeatureConfig FeatureConfig::cqt() {
    FeatureConfig cfg;
    cfg.mode = FeatureMode::kCqt;
    cfg.bins_per_semitone = 2;
    cfg.n_octaves = 8;
    cfg.base_frequencies = {midi_to_hz(24.0)};
    return cfg;
}

void FeatureConfig::validate() const {
    if (hop_length <= 0) throw std::invalid_argument("FeatureConfig: hop_length must be > 0");
    if (bins_per_semitone <= 0 || n_octaves <= 0) {
        throw std::invalid_argument("FeatureConfig: bin layout must be positive");
    }
    if (mode == FeatureMode::kHcqt && base_frequencies.size() != 6) {
        throw std::invalid_argument("FeatureConfig: hcqt mode requires exactly 6 base frequencies");
    }
    if (mode == FeatureMode::kCqt && base_frequencies.size() != 1) {
        throw std::invalid_argument("FeatureConfig: cqt mode requires exactly 1 base frequency");
    }
    for (double f : base_frequencies) {
        if (!(f > 0.0)) throw std::invalid_argument("FeatureConfig: base frequency must be > 0");
    }
}

std::vector<double> frame_times(std::size_t n_frames, const FeatureConfig& cfg) {
    std::vector<double> times(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        times[i] = static_cast<double>(i) * cfg.hop_length / kSampleRate;
    }
    return times;
}

namespace {

SpectralFeatures compute_impl(const AudioClip& clip, const FeatureConfig& cfg) {
    cfg.validate();
    if (clip.samples.empty()) {
        throw std::invalid_argument("compute_features: empty audio clip");
    }
    const std::size_t n_frames = static_cast<std::size_t>(
        std::ceil(static_cast<double>(clip.samples.size()) / cfg.hop_length));

    SpectralFeatures feats;
    feats.config = cfg;
    feats.n_channels = cfg.n_channels();
    feats.n_bins = cfg.n_bins();
    feats.n_frames = static_cast<int>(n_frames);
    feats.frame_times = frame_times(n_frames, cfg);
    feats.magnitudes.resize(static_cast<std::size_t>(feats.n_channels) * feats.n_bins *
                            n_frames);

    for (int c = 0; c < feats.n_channels; ++c) {
        const ChannelKernels kernels = build_kernels(cfg.base_frequencies[c], feats.n_bins,
                                                     cfg.bins_per_octave(), clip.sample_rate);
        std::vector<double> mags =
            channel_magnitudes(clip, kernels, feats.n_bins, cfg.hop_length, n_frames);
        normalize_channel(mags, feats.magnitudes.data() +
                                    static_cast<std::size_t>(c) * feats.n_bins * n_frames);
    }
    return feats;
}

}  // namespace

SpectralFeatures compute_cqt(const AudioClip& clip, const FeatureConfig& cfg) {
    if (cfg.mode != FeatureMode::kCqt) {
        throw std::invalid_argument("compute_cqt requires a cqt-mode config");
    }
    return compute_impl(clip, cfg);
}

SpectralFeatures compute_hcqt(const AudioClip& clip, const FeatureConfig& cfg) {
    if (cfg.mode != FeatureMode::kHcqt) {
        throw std::invalid_argument("compute_hcqt requires an hcqt-mode config");
    }
    return compute_impl(clip, cfg);
}

SpectralFeatures compute_features(const AudioClip& clip, const FeatureConfig& cfg) {
    return cfg.mode == FeatureMode::kHcqt ? compute_hcqt(clip, cfg) : compute_cqt(clip, cfg);
}

std::uint64_t feature_content_hash(const AudioClip& clip, const FeatureConfig& cfg) {
    std::uint64_t h = io::fnv1a(std::span<const float>(clip.samples));
    h = io::fnv1a(std::to_string(cfg.hop_length), h);
    h = io::fnv1a(std::to_string(cfg.bins_per_semitone), h);
    h = io::fnv1a(std::to_string(cfg.n_octaves), h);
    h = io::fnv1a(cfg.mode == FeatureMode::kHcqt ? "hcqt" : "cqt", h);
    for (double f : cfg.base_frequencies) {
        h = io::fnv1a(std::to_string(f), h);
    }
    return h;
}

void save_feature_cache(const std::filesystem::path& path, const SpectralFeatures& feats,
                        std::uint64_t content_hash) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write feature cache: " + path.string());
    io::write_u32(f, kCacheMagic);
    io::write_u32(f, kCacheVersion);
    io::write_u64(f, content_hash);
    io::write_u32(f, feats.config.mode == FeatureMode::kHcqt ? 0u : 1u);
    io::write_u32(f, static_cast<std::uint32_t>(feats.config.hop_length));
    io::write_u32(f, static_cast<std::uint32_t>(feats.config.bins_per_semitone));
    io::write_u32(f, static_cast<std::uint32_t>(feats.config.n_octaves));
    io::write_u64(f, feats.config.base_frequencies.size());
    for (double b : feats.config.base_frequencies) io::write_f64(f, b);
    io::write_u32(f, static_cast<std::uint32_t>(feats.n_channels));
    io::write_u32(f, static_cast<std::uint32_t>(feats.n_bins));
    io::write_u32(f, static_cast<std::uint32_t>(feats.n_frames));
    io::write_f64_block(f, feats.frame_times);
    io::write_f32_block(f, feats.magnitudes);
}

std::optional<SpectralFeatures> load_feature_cache(const std::filesystem::path& path,
                                                   std::uint64_t expected_hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return std::nullopt;
    try {
        if (io::read_u32(f) != kCacheMagic || io::read_u32(f) != kCacheVersion) {
            return std::nullopt;
        }
        if (io::read_u64(f) != expected_hash) {
            return std::nullopt;  // parameters or audio changed
        }
        SpectralFeatures feats;
        feats.config.mode = io::read_u32(f) == 0 ? FeatureMode::kHcqt : FeatureMode::kCqt;
        feats.config.hop_length = static_cast<int>(io::read_u32(f));
        feats.config.bins_per_semitone = static_cast<int>(io::read_u32(f));
        feats.config.n_octaves = static_cast<int>(io::read_u32(f));
        const std::uint64_t nb = io::read_u64(f);
        for (std::uint64_t i = 0; i < nb; ++i) {
            feats.config.base_frequencies.push_back(io::read_f64(f));
        }
        feats.n_channels = static_cast<int>(io::read_u32(f));
        feats.n_bins = static_cast<int>(io::read_u32(f));
        feats.n_frames = static_cast<int>(io::read_u32(f));
        feats.frame_times = io::read_f64_block(f);
        feats.magnitudes = io::read_f32_block(f);
        return feats;
    } catch (const std::exception&) {
        return std::nullopt;  // treat a corrupt cache entry as a miss
    }
}

SpectralFeatures cached_features(const AudioClip& clip, const FeatureConfig& cfg,
                                 const std::filesystem::path& cache_dir,
                                 const std::string& track_id) {
    const std::uint64_t hash = feature_content_hash(clip, cfg);
    const std::filesystem::path path = cache_dir / (track_id + ".feat");
    if (auto cached = load_feature_cache(path, hash)) {
        return std::move(*cached);
    }
    SpectralFeatures feats = compute_features(clip, cfg);
    std::filesystem::create_directories(cache_dir);
    save_feature_cache(path, feats, hash);
    return feats;
}

}  // namespace frettrace
