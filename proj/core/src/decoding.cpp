#include "frettrace/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "frettrace/continuous_bernoulli.hpp"
#include "frettrace/serialization.hpp"

namespace frettrace {

using nlohmann::json;

namespace {

double hop_from_times(const std::vector<double>& frame_times) {
    return frame_times.size() >= 2 ? frame_times[1] - frame_times[0]
                                   : kHopLength / kSampleRate;
}

/// End time of frame t, i.e. the start of the first frame after it.
double frame_end_time(const std::vector<double>& frame_times, int t) {
    const double hop = hop_from_times(frame_times);
    if (t < static_cast<int>(frame_times.size())) return frame_times[static_cast<std::size_t>(t)];
    return frame_times.back() + hop;
}

}  // namespace

FrameTablature threshold_tablature(const HeadLogitsBatch& logits, const StringConfig& scfg,
                                   const DecodingConfig& dcfg) {
    const int n_classes = scfg.n_fret_classes();
    if (logits.n_pairs != 6 * n_classes) {
        throw std::invalid_argument("threshold_tablature: head width does not match tuning");
    }
    FrameTablature out;
    out.n_strings = 6;
    out.n_frames = logits.n;
    out.slots.assign(static_cast<std::size_t>(logits.n) * 6, StringSlot{});

    for (int t = 0; t < logits.n; ++t) {
        const float* tab = logits.tab_row(t);
        const float* dev = logits.deviation.empty() ? nullptr : logits.dev_row(t);
        for (int s = 0; s < 6; ++s) {
            int best = -1;
            double best_act = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                const double act = logistic(static_cast<double>(tab[s * n_classes + c]));
                if (act >= dcfg.activation_threshold && act > best_act) {
                    best = c;
                    best_act = act;
                }
            }
            if (best < 0) continue;
            StringSlot& slot = out.at(t, s);
            slot.fret = best;
            slot.activation = static_cast<float>(best_act);
            if (dev != nullptr) {
                const double z = dev[s * n_classes + best];
                slot.deviation = static_cast<float>(
                    dcfg.sigmoid_deviation
                        ? cb::deviation_from_logit_sigmoid(z, scfg.max_deviation_r)
                        : cb::deviation_from_logit(z, scfg.max_deviation_r));
            }
        }
    }
    return out;
}

OnsetGrid threshold_onsets(const HeadLogitsBatch& logits, const StringConfig& scfg,
                           const DecodingConfig& dcfg) {
    OnsetGrid grid;
    grid.n_strings = 6;
    grid.n_classes = scfg.n_fret_classes();
    grid.n_frames = logits.n;
    if (logits.onset.empty()) return grid;  // no onset head
    grid.active.assign(logits.onset.size(), 0);
    for (std::size_t i = 0; i < logits.onset.size(); ++i) {
        grid.active[i] =
            logistic(static_cast<double>(logits.onset[i])) >= dcfg.activation_threshold ? 1 : 0;
    }
    return grid;
}

std::vector<StampedNote> decode_notes(const FrameTablature& frames, const OnsetGrid& onsets,
                                      const std::vector<double>& frame_times,
                                      const StringConfig& scfg, const DecodingConfig& dcfg) {
    if (static_cast<int>(frame_times.size()) < frames.n_frames) {
        throw std::invalid_argument("decode_notes: frame_times shorter than the grid");
    }
    std::vector<StampedNote> notes;
    for (int s = 0; s < frames.n_strings; ++s) {
        int cur_fret = -1;
        int cur_start = 0;
        const auto close = [&](int end_frame) {
            if (cur_fret < 0) return;
            notes.push_back(make_note(s, cur_fret, frame_times[static_cast<std::size_t>(cur_start)],
                                      frame_end_time(frame_times, end_frame), scfg));
            cur_fret = -1;
        };
        for (int t = 0; t < frames.n_frames; ++t) {
            const StringSlot& slot = frames.at(t, s);
            if (slot.fret < 0) {
                close(t);
                continue;
            }
            const bool onset_here = onsets.at(t, s, slot.fret);
            if (cur_fret < 0) {
                if (onset_here) {
                    cur_fret = slot.fret;
                    cur_start = t;
                }
            } else if (slot.fret == cur_fret) {
                if (onset_here && t > cur_start) {
                    close(t);  // re-articulation splits the run
                    cur_fret = slot.fret;
                    cur_start = t;
                }
            } else {
                close(t);
                if (onset_here || dcfg.fret_change_starts_new_note) {
                    cur_fret = slot.fret;
                    cur_start = t;
                }
            }
        }
        close(frames.n_frames);
    }
    std::sort(notes.begin(), notes.end(), [](const StampedNote& a, const StampedNote& b) {
        if (a.onset != b.onset) return a.onset < b.onset;
        return a.string < b.string;
    });
    return notes;
}

std::vector<StampedNote> decode_notes_clustered(const FrameTablature& frames,
                                                const std::vector<double>& frame_times,
                                                const StringConfig& scfg,
                                                const DecodingConfig& dcfg) {
    std::vector<StampedNote> notes;
    for (int s = 0; s < frames.n_strings; ++s) {
        int cur_fret = -1;
        int cur_start = 0;
        const auto close = [&](int end_frame) {
            if (cur_fret < 0) return;
            if (end_frame - cur_start >= dcfg.min_note_frames) {
                notes.push_back(make_note(s, cur_fret,
                                          frame_times[static_cast<std::size_t>(cur_start)],
                                          frame_end_time(frame_times, end_frame), scfg));
            }
            cur_fret = -1;
        };
        for (int t = 0; t < frames.n_frames; ++t) {
            const StringSlot& slot = frames.at(t, s);
            if (slot.fret < 0) {
                close(t);
            } else if (cur_fret < 0) {
                cur_fret = slot.fret;
                cur_start = t;
            } else if (slot.fret != cur_fret) {
                close(t);
                cur_fret = slot.fret;
                cur_start = t;
            }
        }
        close(frames.n_frames);
    }
    std::sort(notes.begin(), notes.end(), [](const StampedNote& a, const StampedNote& b) {
        if (a.onset != b.onset) return a.onset < b.onset;
        return a.string < b.string;
    });
    return notes;
}

std::vector<PitchContour> attach_contours(const std::vector<StampedNote>& notes,
                                          const FrameTablature& frames,
                                          const std::vector<double>& frame_times) {
    const double hop = hop_from_times(frame_times);
    std::vector<PitchContour> contours(notes.size());
    for (std::size_t i = 0; i < notes.size(); ++i) {
        const StampedNote& note = notes[i];
        contours[i].note_id = i;
        const int t0 = std::max(0, static_cast<int>(std::lround(note.onset / hop)));
        const int t1 = std::min(frames.n_frames, static_cast<int>(std::lround(note.offset / hop)));
        for (int t = t0; t < t1; ++t) {
            const StringSlot& slot = frames.at(t, note.string);
            if (slot.fret != note.fret) continue;
            contours[i].times.push_back(frame_times[static_cast<std::size_t>(t)]);
            contours[i].pitches.push_back(note.nominal_pitch + slot.deviation);
        }
    }
    return contours;
}

void write_transcription(const std::filesystem::path& path, const TranscriptionResult& result) {
    std::vector<NoteRecord> records(result.notes.size());
    for (std::size_t i = 0; i < result.notes.size(); ++i) {
        records[i].note = result.notes[i];
        if (i < result.contours.size()) {
            const PitchContour& c = result.contours[i];
            for (std::size_t j = 0; j < c.times.size(); ++j) {
                records[i].contour.emplace_back(c.times[j], c.pitches[j]);
            }
        }
    }
    write_note_records(path, records);
}

std::vector<NoteRecord> read_transcription(const std::filesystem::path& path,
                                           const StringConfig& cfg) {
    return read_note_records(path, cfg);
}

namespace {
constexpr std::uint32_t kGridMagic = 0x46544752;  // "FTGR"
constexpr std::uint32_t kGridVersion = 1;
}  // namespace

void write_frame_grid(const std::filesystem::path& path, const FrameTablature& frames,
                      const std::vector<double>& frame_times, double r) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write frame grid: " + path.string());
    io::write_u32(f, kGridMagic);
    io::write_u32(f, kGridVersion);
    io::write_u32(f, static_cast<std::uint32_t>(frames.n_strings));
    io::write_u32(f, static_cast<std::uint32_t>(frames.n_frames));
    io::write_f64(f, r);
    io::write_f64_block(f, frame_times);
    std::vector<float> flat;
    flat.reserve(frames.slots.size() * 3);
    for (const StringSlot& s : frames.slots) {
        flat.push_back(static_cast<float>(s.fret));
        flat.push_back(s.activation);
        flat.push_back(s.deviation);
    }
    io::write_f32_block(f, flat);
}

FrameTablature read_frame_grid(const std::filesystem::path& path,
                               std::vector<double>* frame_times_out, double* r_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open frame grid: " + path.string());
    if (io::read_u32(f) != kGridMagic || io::read_u32(f) != kGridVersion) {
        throw std::runtime_error("not a frame grid file: " + path.string());
    }
    FrameTablature out;
    out.n_strings = static_cast<int>(io::read_u32(f));
    out.n_frames = static_cast<int>(io::read_u32(f));
    const double r = io::read_f64(f);
    if (r_out != nullptr) *r_out = r;
    const std::vector<double> times = io::read_f64_block(f);
    if (frame_times_out != nullptr) *frame_times_out = times;
    const std::vector<float> flat = io::read_f32_block(f);
    if (flat.size() != static_cast<std::size_t>(out.n_strings) * out.n_frames * 3) {
        throw std::runtime_error("frame grid size mismatch in " + path.string());
    }
    out.slots.resize(flat.size() / 3);
    for (std::size_t i = 0; i < out.slots.size(); ++i) {
        out.slots[i].fret = static_cast<int>(flat[3 * i]);
        out.slots[i].activation = flat[3 * i + 1];
        out.slots[i].deviation = flat[3 * i + 2];
    }
    return out;
}

FrameTablature frame_tablature_from_targets(const TablatureTargets& targets,
                                            const StringConfig& scfg) {
    FrameTablature out;
    out.n_strings = targets.n_strings;
    out.n_frames = targets.n_frames;
    out.slots.assign(static_cast<std::size_t>(out.n_frames) * out.n_strings, StringSlot{});
    const double r = scfg.max_deviation_r;
    for (int t = 0; t < targets.n_frames; ++t) {
        for (int s = 0; s < targets.n_strings; ++s) {
            for (int c = 0; c < targets.n_classes; ++c) {
                if (targets.activity_at(s, c, t) == 0.f) continue;
                StringSlot& slot = out.at(t, s);
                slot.fret = c;
                slot.activation = 1.f;
                slot.deviation =
                    static_cast<float>((2.0 * targets.deviation_at(s, c, t) - 1.0) * r);
            }
        }
    }
    return out;
}

FrameTablature frame_tablature_from_notes(const std::vector<StampedNote>& notes, int n_frames,
                                          double hop_seconds) {
    FrameTablature out;
    out.n_strings = 6;
    out.n_frames = n_frames;
    out.slots.assign(static_cast<std::size_t>(n_frames) * 6, StringSlot{});

    std::vector<double> onset_of(static_cast<std::size_t>(n_frames) * 6,
                                 -std::numeric_limits<double>::infinity());
    for (const StampedNote& note : notes) {
        const int first = static_cast<int>(std::ceil(note.onset / hop_seconds - 1e-9));
        for (int t = std::max(first, 0); t < n_frames; ++t) {
            const double tt = t * hop_seconds;
            if (tt >= note.offset) break;
            const std::size_t idx = static_cast<std::size_t>(t) * 6 + note.string;
            if (note.onset >= onset_of[idx]) {  // later onset wins
                onset_of[idx] = note.onset;
                out.slots[idx].fret = note.fret;
                out.slots[idx].activation = 1.f;
                out.slots[idx].deviation = 0.f;
            }
        }
    }
    return out;
}

HeadLogitsBatch oracle_logits_from_targets(const TablatureTargets& targets) {
    constexpr float kSaturated = 12.f;
    HeadLogitsBatch out;
    out.n = targets.n_frames;
    out.n_pairs = targets.n_strings * targets.n_classes;
    out.tablature.resize(targets.activity.size());
    out.onset.resize(targets.activity.size());
    out.deviation.resize(targets.activity.size());
    for (std::size_t i = 0; i < targets.activity.size(); ++i) {
        out.tablature[i] = targets.activity[i] > 0.f ? kSaturated : -kSaturated;
        out.onset[i] = targets.onsets[i] > 0.f ? kSaturated : -kSaturated;
        if (targets.deviation_mask[i] > 0.f) {
            const double x =
                std::clamp(static_cast<double>(targets.deviation_x[i]), 1e-3, 1.0 - 1e-3);
            out.deviation[i] = static_cast<float>(cb::logit_for_mean(x));
        } else {
            out.deviation[i] = 0.f;
        }
    }
    return out;
}

}  // namespace frettrace
