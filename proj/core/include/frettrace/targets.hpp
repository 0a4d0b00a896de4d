#pragma once

#include <vector>

#include "frettrace/annotations.hpp"
#include "frettrace/common.hpp"

namespace frettrace {

/// Frame-level training targets. Logical shape is [string][fret_class][frame];
/// storage is frame-major ([frame][string][class]) so training sequences can
/// be sliced contiguously.
struct TablatureTargets {
    int n_strings = 6;
    int n_classes = 20;
    int n_frames = 0;
    std::vector<float> activity;
    std::vector<float> onsets;
    std::vector<float> deviation_x;     // (d/r + 1) / 2 in [0,1] where masked
    std::vector<float> deviation_mask;  // 1 exactly where activity is 1

    std::size_t flat(int string, int fret_class, int frame) const {
        return (static_cast<std::size_t>(frame) * n_strings + string) * n_classes + fret_class;
    }
    float activity_at(int s, int c, int t) const { return activity[flat(s, c, t)]; }
    float onset_at(int s, int c, int t) const { return onsets[flat(s, c, t)]; }
    float deviation_at(int s, int c, int t) const { return deviation_x[flat(s, c, t)]; }
    float mask_at(int s, int c, int t) const { return deviation_mask[flat(s, c, t)]; }

    std::size_t frame_stride() const {
        return static_cast<std::size_t>(n_strings) * n_classes;
    }

    /// Contiguous frame slice [t0, t0+len); frames past the end are silence
    /// (all-zero activity, deviation masked out).
    TablatureTargets slice(int t0, int len) const;
};

/// Rasterizes realigned notes and their contours onto the feature frame
/// grid. A frame is active when its center time lies in [onset, offset);
/// onsets mark only each note's first active frame; deviation targets are
/// interpolated from the contour (nominal pitch when the contour is empty)
/// and clipped to [-r, r]. Two same-string notes active in one frame is a
/// hard error.
TablatureTargets generate_targets(const std::vector<StampedNote>& notes,
                                  const std::vector<PitchContour>& contours, int n_frames,
                                  const StringConfig& cfg,
                                  double hop_seconds = kHopLength / kSampleRate);

}  // namespace frettrace
