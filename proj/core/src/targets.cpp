#include "frettrace/targets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace frettrace {

TablatureTargets TablatureTargets::slice(int t0, int len) const {
    TablatureTargets out;
    out.n_strings = n_strings;
    out.n_classes = n_classes;
    out.n_frames = len;
    const std::size_t stride = frame_stride();
    out.activity.assign(static_cast<std::size_t>(len) * stride, 0.f);
    out.onsets.assign(static_cast<std::size_t>(len) * stride, 0.f);
    out.deviation_x.assign(static_cast<std::size_t>(len) * stride, 0.5f);
    out.deviation_mask.assign(static_cast<std::size_t>(len) * stride, 0.f);
    const int copy = std::clamp(n_frames - t0, 0, len);
    if (copy > 0 && t0 >= 0) {
        const std::size_t src = static_cast<std::size_t>(t0) * stride;
        const std::size_t cnt = static_cast<std::size_t>(copy) * stride;
        std::copy_n(activity.begin() + src, cnt, out.activity.begin());
        std::copy_n(onsets.begin() + src, cnt, out.onsets.begin());
        std::copy_n(deviation_x.begin() + src, cnt, out.deviation_x.begin());
        std::copy_n(deviation_mask.begin() + src, cnt, out.deviation_mask.begin());
    }
    return out;
}

namespace {

/// Contour pitch at time t: linear interpolation inside the observed span,
/// nearest observation outside it.
double contour_pitch_at(const PitchContour& c, double t) {
    if (t <= c.times.front()) return c.pitches.front();
    if (t >= c.times.back()) return c.pitches.back();
    const auto it = std::upper_bound(c.times.begin(), c.times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - c.times.begin());
    const std::size_t lo = hi - 1;
    const double span = c.times[hi] - c.times[lo];
    if (span <= 0.0) return c.pitches[lo];
    const double w = (t - c.times[lo]) / span;
    return c.pitches[lo] + w * (c.pitches[hi] - c.pitches[lo]);
}

}  // namespace

TablatureTargets generate_targets(const std::vector<StampedNote>& notes,
                                  const std::vector<PitchContour>& contours, int n_frames,
                                  const StringConfig& cfg, double hop_seconds) {
    cfg.validate();
    if (notes.size() != contours.size()) {
        throw std::invalid_argument("generate_targets: one contour per note required");
    }
    const double r = cfg.max_deviation_r;

    TablatureTargets tg;
    tg.n_strings = 6;
    tg.n_classes = cfg.n_fret_classes();
    tg.n_frames = n_frames;
    const std::size_t total = static_cast<std::size_t>(n_frames) * tg.frame_stride();
    tg.activity.assign(total, 0.f);
    tg.onsets.assign(total, 0.f);
    tg.deviation_x.assign(total, 0.5f);
    tg.deviation_mask.assign(total, 0.f);

    for (std::size_t i = 0; i < notes.size(); ++i) {
        const StampedNote& note = notes[i];
        const PitchContour& contour = contours[i];
        const int first = static_cast<int>(std::ceil(note.onset / hop_seconds - 1e-9));
        bool first_active = true;
        for (int t = std::max(first, 0); t < n_frames; ++t) {
            const double tt = t * hop_seconds;
            if (tt >= note.offset) break;
            const std::size_t idx = tg.flat(note.string, note.fret, t);

            for (int c = 0; c < tg.n_classes; ++c) {
                if (c != note.fret &&
                    tg.activity[tg.flat(note.string, c, t)] != 0.f) {
                    throw std::runtime_error(
                        "generate_targets: two notes active on string " +
                        std::to_string(note.string) + " at frame " + std::to_string(t));
                }
            }
            if (tg.activity[idx] != 0.f) {
                throw std::runtime_error("generate_targets: two notes active on string " +
                                         std::to_string(note.string) + " at frame " +
                                         std::to_string(t));
            }

            tg.activity[idx] = 1.f;
            if (first_active) {
                tg.onsets[idx] = 1.f;
                first_active = false;
            }
            double dev = 0.0;
            if (!contour.empty()) {
                dev = contour_pitch_at(contour, tt) - note.nominal_pitch;
                dev = std::clamp(dev, -r, r);
            }
            tg.deviation_x[idx] = static_cast<float>((dev / r + 1.0) / 2.0);
            tg.deviation_mask[idx] = 1.f;
        }
    }
    return tg;
}

}  // namespace frettrace
