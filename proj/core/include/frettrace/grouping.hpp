#pragma once

#include <vector>

#include "frettrace/annotations.hpp"

namespace frettrace {

struct GroupingConfig {
    double boundary_slack_s = 0.050;    // admission window around note spans
    double cluster_gap_s = 0.035;       // larger gaps split observation clusters
    double min_cluster_span_s = 0.070;  // ~3 feature frames; shorter clusters are sporadic
};

/// Assigns pitch observations to same-string notes, discards observations
/// deviating more than r semitones from the nominal pitch, prunes sporadic
/// clusters, and returns one (possibly empty) contour per note, indexed by
/// note position. Each retained contour is temporally contiguous.
std::vector<PitchContour> cluster_group_contours(const std::vector<StampedNote>& notes,
                                                 const std::vector<PitchObservation>& obs,
                                                 const StringConfig& cfg,
                                                 const GroupingConfig& gcfg = {});

/// Snaps each note's boundaries to the span of its grouped contour (when
/// nonempty), then truncates earlier offsets so no same-string overlap
/// remains. Notes squeezed to nothing are dropped together with their
/// contour entry.
std::pair<std::vector<StampedNote>, std::vector<PitchContour>> realign_note_boundaries(
    const std::vector<StampedNote>& notes, const std::vector<PitchContour>& contours);

}  // namespace frettrace
