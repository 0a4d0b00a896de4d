#include "frettrace/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace frettrace {

std::vector<PitchContour> cluster_group_contours(const std::vector<StampedNote>& notes,
                                                 const std::vector<PitchObservation>& obs,
                                                 const StringConfig& cfg,
                                                 const GroupingConfig& gcfg) {
    cfg.validate();
    const double r = cfg.max_deviation_r;

    // per-note observation buckets
    std::vector<std::vector<const PitchObservation*>> assigned(notes.size());

    for (const PitchObservation& o : obs) {
        int best = -1;
        double best_dev = r + 1.0;
        bool best_inside = false;
        for (std::size_t i = 0; i < notes.size(); ++i) {
            const StampedNote& n = notes[i];
            if (n.string != o.string) continue;
            if (o.time < n.onset - gcfg.boundary_slack_s ||
                o.time > n.offset + gcfg.boundary_slack_s) {
                continue;
            }
            const double dev = std::abs(o.pitch - n.nominal_pitch);
            if (dev > r) continue;  // the deviation gate
            const bool inside = o.time >= n.onset && o.time <= n.offset;
            // nearest nominal pitch wins; note spans containing the
            // observation break ties against slack-only candidates
            if (dev < best_dev || (dev == best_dev && inside && !best_inside)) {
                best = static_cast<int>(i);
                best_dev = dev;
                best_inside = inside;
            }
        }
        if (best >= 0) assigned[static_cast<std::size_t>(best)].push_back(&o);
    }

    std::vector<PitchContour> contours(notes.size());
    for (std::size_t i = 0; i < notes.size(); ++i) {
        auto& bucket = assigned[i];
        contours[i].note_id = i;
        if (bucket.empty()) continue;
        std::sort(bucket.begin(), bucket.end(),
                  [](const PitchObservation* a, const PitchObservation* b) {
                      return a->time < b->time;
                  });

        // split into clusters at gaps, drop sporadic ones, keep the longest
        struct Cluster {
            std::size_t begin, end;  // half-open index range into bucket
            double span;
        };
        std::vector<Cluster> clusters;
        std::size_t start = 0;
        for (std::size_t j = 1; j <= bucket.size(); ++j) {
            if (j == bucket.size() || bucket[j]->time - bucket[j - 1]->time > gcfg.cluster_gap_s) {
                clusters.push_back({start, j, bucket[j - 1]->time - bucket[start]->time});
                start = j;
            }
        }
        const Cluster* keep = nullptr;
        for (const Cluster& c : clusters) {
            if (c.span < gcfg.min_cluster_span_s) continue;
            if (keep == nullptr || c.span > keep->span) keep = &c;
        }
        if (keep == nullptr) continue;  // all sporadic; empty contour
        for (std::size_t j = keep->begin; j < keep->end; ++j) {
            contours[i].times.push_back(bucket[j]->time);
            contours[i].pitches.push_back(bucket[j]->pitch);
        }
    }
    return contours;
}

std::pair<std::vector<StampedNote>, std::vector<PitchContour>> realign_note_boundaries(
    const std::vector<StampedNote>& notes, const std::vector<PitchContour>& contours) {
    if (notes.size() != contours.size()) {
        throw std::invalid_argument("realign_note_boundaries: one contour per note required");
    }

    std::vector<StampedNote> adjusted = notes;
    for (std::size_t i = 0; i < notes.size(); ++i) {
        const PitchContour& c = contours[i];
        if (c.times.size() >= 2 && c.times.back() > c.times.front()) {
            adjusted[i].onset = c.times.front();
            adjusted[i].offset = c.times.back();
        }
    }

    // resolve same-string overlaps: a later onset truncates the earlier offset
    std::vector<std::size_t> order(adjusted.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (adjusted[a].string != adjusted[b].string) return adjusted[a].string < adjusted[b].string;
        return adjusted[a].onset < adjusted[b].onset;
    });
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        StampedNote& cur = adjusted[order[k]];
        const StampedNote& next = adjusted[order[k + 1]];
        if (cur.string == next.string && cur.offset > next.onset) {
            cur.offset = next.onset;
        }
    }

    std::pair<std::vector<StampedNote>, std::vector<PitchContour>> out;
    for (std::size_t i = 0; i < adjusted.size(); ++i) {
        if (!(adjusted[i].onset < adjusted[i].offset)) continue;  // fully swallowed
        PitchContour c = contours[i];
        c.note_id = out.first.size();
        out.first.push_back(adjusted[i]);
        out.second.push_back(std::move(c));
    }
    return out;
}

}  // namespace frettrace
