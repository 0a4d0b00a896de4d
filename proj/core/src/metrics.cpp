#include "frettrace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace frettrace {

PRF MatchCounts::prf() const {
    if (n_pred == 0 && n_ref == 0) return {1.0, 1.0, 1.0};
    PRF out;
    out.precision = n_pred > 0 ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
    out.recall = n_ref > 0 ? static_cast<double>(tp) / static_cast<double>(n_ref) : 0.0;
    const double sum = out.precision + out.recall;
    out.f1 = sum > 0.0 ? 2.0 * out.precision * out.recall / sum : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// frame-level

MatchCounts frame_tablature_counts(const FrameTablature& pred, const FrameTablature& ref) {
    if (pred.n_frames != ref.n_frames || pred.n_strings != ref.n_strings) {
        throw std::invalid_argument("frame_tablature_counts: mismatched frame grids");
    }
    MatchCounts counts;
    for (int t = 0; t < pred.n_frames; ++t) {
        for (int s = 0; s < pred.n_strings; ++s) {
            const int pf = pred.at(t, s).fret;
            const int rf = ref.at(t, s).fret;
            if (pf >= 0) ++counts.n_pred;
            if (rf >= 0) ++counts.n_ref;
            if (pf >= 0 && pf == rf) ++counts.tp;
        }
    }
    return counts;
}

PRF frame_tablature_prf(const FrameTablature& pred, const FrameTablature& ref) {
    return frame_tablature_counts(pred, ref).prf();
}

MatchCounts frame_multipitch_counts(const FrameTablature& pred, const FrameTablature& ref,
                                    const StringConfig& scfg) {
    if (pred.n_frames != ref.n_frames) {
        throw std::invalid_argument("frame_multipitch_counts: mismatched frame grids");
    }
    MatchCounts counts;
    const auto pitch_set = [&](const FrameTablature& ft, int t) {
        std::set<int> pitches;
        for (int s = 0; s < ft.n_strings; ++s) {
            const int fret = ft.at(t, s).fret;
            if (fret >= 0) pitches.insert(scfg.open_string_pitches[s] + fret);
        }
        return pitches;
    };
    for (int t = 0; t < pred.n_frames; ++t) {
        const std::set<int> p = pitch_set(pred, t);
        const std::set<int> r = pitch_set(ref, t);
        counts.n_pred += p.size();
        counts.n_ref += r.size();
        for (int pitch : p) {
            if (r.count(pitch) != 0) ++counts.tp;
        }
    }
    return counts;
}

PRF frame_multipitch_prf(const FrameTablature& pred, const FrameTablature& ref,
                         const StringConfig& scfg) {
    return frame_multipitch_counts(pred, ref, scfg).prf();
}

// ---------------------------------------------------------------------------
// bipartite matching (Kuhn's augmenting paths); sizes here are tiny

namespace {

class BipartiteMatcher {
public:
    BipartiteMatcher(std::size_t n_left, std::size_t n_right)
        : adj_(n_left), match_right_(n_right, -1) {}

    void add_edge(std::size_t left, std::size_t right) { adj_[left].push_back(right); }

    std::size_t max_matching() {
        std::size_t matched = 0;
        for (std::size_t u = 0; u < adj_.size(); ++u) {
            visited_.assign(match_right_.size(), false);
            if (try_augment(u)) ++matched;
        }
        return matched;
    }

private:
    bool try_augment(std::size_t u) {
        for (std::size_t v : adj_[u]) {
            if (visited_[v]) continue;
            visited_[v] = true;
            if (match_right_[v] < 0 || try_augment(static_cast<std::size_t>(match_right_[v]))) {
                match_right_[v] = static_cast<int>(u);
                return true;
            }
        }
        return false;
    }

    std::vector<std::vector<std::size_t>> adj_;
    std::vector<int> match_right_;
    std::vector<bool> visited_;
};

}  // namespace

MatchCounts note_match_counts(const std::vector<StampedNote>& pred,
                              const std::vector<StampedNote>& ref,
                              const NoteMatchConfig& cfg) {
    MatchCounts counts;
    counts.n_pred = pred.size();
    counts.n_ref = ref.size();
    BipartiteMatcher matcher(pred.size(), ref.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < ref.size(); ++j) {
            if (std::abs(pred[i].onset - ref[j].onset) > cfg.onset_tolerance_s) continue;
            if (std::abs(static_cast<double>(pred[i].nominal_pitch) - ref[j].nominal_pitch) >
                cfg.pitch_tolerance_st) {
                continue;
            }
            if (cfg.string_dependent && pred[i].string != ref[j].string) continue;
            matcher.add_edge(i, j);
        }
    }
    counts.tp = matcher.max_matching();
    return counts;
}

PRF note_prf(const std::vector<StampedNote>& pred, const std::vector<StampedNote>& ref,
             bool string_dependent) {
    NoteMatchConfig cfg;
    cfg.string_dependent = string_dependent;
    return note_match_counts(pred, ref, cfg).prf();
}

// ---------------------------------------------------------------------------
// continuous multi-pitch

PitchGrid pitch_grid_from_frames(const FrameTablature& frames, const StringConfig& scfg) {
    PitchGrid grid(static_cast<std::size_t>(frames.n_frames));
    for (int t = 0; t < frames.n_frames; ++t) {
        for (int s = 0; s < frames.n_strings; ++s) {
            const StringSlot& slot = frames.at(t, s);
            if (slot.fret < 0) continue;
            grid[static_cast<std::size_t>(t)].push_back(
                FramePitch{s, scfg.open_string_pitches[s] + slot.fret + slot.deviation});
        }
    }
    return grid;
}

PitchGrid nominal_pitch_baseline(const FrameTablature& frames, const StringConfig& scfg) {
    PitchGrid grid(static_cast<std::size_t>(frames.n_frames));
    for (int t = 0; t < frames.n_frames; ++t) {
        for (int s = 0; s < frames.n_strings; ++s) {
            const StringSlot& slot = frames.at(t, s);
            if (slot.fret < 0) continue;
            grid[static_cast<std::size_t>(t)].push_back(
                FramePitch{s, static_cast<double>(scfg.open_string_pitches[s] + slot.fret)});
        }
    }
    return grid;
}

PitchGrid pitch_grid_from_observations(const std::vector<PitchObservation>& obs, int n_frames,
                                       double hop_seconds, double max_gap_s) {
    PitchGrid grid(static_cast<std::size_t>(n_frames));
    for (int s = 0; s < 6; ++s) {
        std::vector<const PitchObservation*> per_string;
        for (const auto& o : obs) {
            if (o.string == s) per_string.push_back(&o);
        }
        if (per_string.empty()) continue;
        std::sort(per_string.begin(), per_string.end(),
                  [](const PitchObservation* a, const PitchObservation* b) {
                      return a->time < b->time;
                  });
        std::size_t seg = 0;
        for (int t = 0; t < n_frames; ++t) {
            const double tt = t * hop_seconds;
            while (seg + 1 < per_string.size() && per_string[seg + 1]->time <= tt) ++seg;
            const PitchObservation* lo = per_string[seg];
            const PitchObservation* hi =
                seg + 1 < per_string.size() ? per_string[seg + 1] : nullptr;
            double pitch;
            if (std::abs(lo->time - tt) < 1e-9) {
                pitch = lo->pitch;
            } else if (tt < lo->time || hi == nullptr) {
                continue;  // outside the observed span
            } else if (hi->time - lo->time > max_gap_s) {
                continue;  // silent gap between observations
            } else {
                const double w = (tt - lo->time) / (hi->time - lo->time);
                pitch = lo->pitch + w * (hi->pitch - lo->pitch);
            }
            grid[static_cast<std::size_t>(t)].push_back(FramePitch{s, pitch});
        }
    }
    return grid;
}

std::vector<double> default_tolerance_grid() { return {0.05, 0.1, 0.2, 0.3, 0.4, 0.5}; }

MatchCounts continuous_mpe_counts(const PitchGrid& pred, const PitchGrid& ref, double tau,
                                  bool string_dependent, bool greedy) {
    if (pred.size() != ref.size()) {
        throw std::invalid_argument("continuous_mpe_counts: mismatched frame grids");
    }
    MatchCounts counts;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const auto& p = pred[t];
        const auto& r = ref[t];
        counts.n_pred += p.size();
        counts.n_ref += r.size();
        if (p.empty() || r.empty()) continue;

        const auto compatible = [&](const FramePitch& a, const FramePitch& b) {
            if (string_dependent && a.string != b.string) return false;
            return std::abs(a.pitch - b.pitch) <= tau;
        };

        if (greedy) {
            std::vector<bool> used(r.size(), false);
            for (const auto& a : p) {
                int best = -1;
                double best_d = tau + 1.0;
                for (std::size_t j = 0; j < r.size(); ++j) {
                    if (used[j] || !compatible(a, r[j])) continue;
                    const double d = std::abs(a.pitch - r[j].pitch);
                    if (d < best_d) {
                        best = static_cast<int>(j);
                        best_d = d;
                    }
                }
                if (best >= 0) {
                    used[static_cast<std::size_t>(best)] = true;
                    ++counts.tp;
                }
            }
        } else {
            BipartiteMatcher matcher(p.size(), r.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                for (std::size_t j = 0; j < r.size(); ++j) {
                    if (compatible(p[i], r[j])) matcher.add_edge(i, j);
                }
            }
            counts.tp += matcher.max_matching();
        }
    }
    return counts;
}

ToleranceSweep continuous_mpe_sweep(const PitchGrid& pred, const PitchGrid& ref,
                                    const std::vector<double>& tolerances, bool greedy) {
    if (tolerances.empty()) {
        throw std::invalid_argument("continuous_mpe_sweep: empty tolerance list");
    }
    for (std::size_t i = 1; i < tolerances.size(); ++i) {
        if (tolerances[i] <= tolerances[i - 1]) {
            throw std::invalid_argument("continuous_mpe_sweep: tolerances must be strictly increasing");
        }
    }
    ToleranceSweep sweep;
    sweep.tolerances = tolerances;
    for (double tau : tolerances) {
        sweep.string_dependent.push_back(continuous_mpe_counts(pred, ref, tau, true, greedy).prf());
        sweep.string_agnostic.push_back(continuous_mpe_counts(pred, ref, tau, false, greedy).prf());
    }
    return sweep;
}

// ---------------------------------------------------------------------------
// reporting

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write metrics CSV: " + path.string());
    f << "track_id,family,tolerance,precision,recall,f1\n";
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.3f,%.6f,%.6f,%.6f\n", row.track_id.c_str(),
                      row.family.c_str(), row.tolerance, row.scores.precision, row.scores.recall,
                      row.scores.f1);
        f << buf;
    }
}

std::map<std::pair<std::string, double>, PRF> aggregate_rows(const std::vector<MetricsRow>& rows) {
    std::map<std::pair<std::string, double>, std::pair<PRF, std::size_t>> acc;
    for (const auto& row : rows) {
        auto& [sum, n] = acc[{row.family, row.tolerance}];
        sum.precision += row.scores.precision;
        sum.recall += row.scores.recall;
        sum.f1 += row.scores.f1;
        ++n;
    }
    std::map<std::pair<std::string, double>, PRF> out;
    for (const auto& [key, value] : acc) {
        const auto& [sum, n] = value;
        out[key] = PRF{sum.precision / n, sum.recall / n, sum.f1 / n};
    }
    return out;
}

namespace {

nlohmann::json prf_list_to_json(const std::vector<PRF>& prfs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PRF& p : prfs) {
        arr.push_back({{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}});
    }
    return arr;
}

std::vector<PRF> prf_list_from_json(const nlohmann::json& arr) {
    std::vector<PRF> out;
    for (const auto& j : arr) {
        out.push_back(PRF{j.at("precision").get<double>(), j.at("recall").get<double>(),
                          j.at("f1").get<double>()});
    }
    return out;
}

}  // namespace

void write_sweep_json(const std::filesystem::path& path, const std::string& label,
                      const ToleranceSweep& sweep) {
    nlohmann::json j = {{"label", label},
                        {"tolerances", sweep.tolerances},
                        {"string_dependent", prf_list_to_json(sweep.string_dependent)},
                        {"string_agnostic", prf_list_to_json(sweep.string_agnostic)}};
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write sweep: " + path.string());
    f << j.dump(2) << '\n';
}

std::pair<std::string, ToleranceSweep> read_sweep_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open sweep: " + path.string());
    nlohmann::json j;
    f >> j;
    ToleranceSweep sweep;
    sweep.tolerances = j.at("tolerances").get<std::vector<double>>();
    sweep.string_dependent = prf_list_from_json(j.at("string_dependent"));
    sweep.string_agnostic = prf_list_from_json(j.at("string_agnostic"));
    return {j.at("label").get<std::string>(), sweep};
}

void write_metrics_summary_json(const std::filesystem::path& path,
                                const std::vector<MetricsRow>& rows) {
    const auto agg = aggregate_rows(rows);
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& [key, prf] : agg) {
        summary.push_back({{"family", key.first},
                           {"tolerance", key.second},
                           {"precision", prf.precision},
                           {"recall", prf.recall},
                           {"f1", prf.f1}});
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write metrics summary: " + path.string());
    f << summary.dump(2) << '\n';
}

}  // namespace frettrace
