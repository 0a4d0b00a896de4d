#include "frettrace/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "frettrace/common.hpp"

namespace frettrace {

using nlohmann::json;

void StringConfig::validate() const {
    if (n_frets < 1) throw std::invalid_argument("StringConfig: n_frets must be >= 1");
    if (!(max_deviation_r > 0.0)) {
        throw std::invalid_argument("StringConfig: max_deviation_r must be positive");
    }
}

StampedNote make_note(int string, int fret, double onset, double offset,
                      const StringConfig& cfg) {
    if (string < 0 || string >= 6) {
        throw std::invalid_argument("note string index out of range: " + std::to_string(string));
    }
    if (fret < 0 || fret > cfg.n_frets) {
        throw std::invalid_argument("note fret out of range: " + std::to_string(fret));
    }
    if (!(onset < offset)) {
        throw std::invalid_argument("note onset must precede offset");
    }
    return StampedNote{string, fret, onset, offset, cfg.open_string_pitches[string] + fret};
}

namespace {

int string_index_of(const json& annotation) {
    if (!annotation.contains("annotation_metadata")) return -1;
    const auto& meta = annotation.at("annotation_metadata");
    if (!meta.contains("data_source")) return -1;
    const auto& ds = meta.at("data_source");
    try {
        if (ds.is_string()) return std::stoi(ds.get<std::string>());
        if (ds.is_number_integer()) return ds.get<int>();
    } catch (const std::exception&) {
        return -1;
    }
    return -1;
}

double observation_pitch_midi(const json& value) {
    // GuitarSet pitch_contour values are {"frequency": Hz, "voiced": bool,
    // "index": int}; plain numbers are taken as Hz.
    double hz = 0.0;
    if (value.is_object()) {
        if (value.contains("voiced") && !value.at("voiced").get<bool>()) return -1.0;
        if (!value.contains("frequency")) return -1.0;
        hz = value.at("frequency").get<double>();
    } else if (value.is_number()) {
        hz = value.get<double>();
    }
    if (hz <= 0.0) return -1.0;
    return hz_to_midi(hz);
}

}  // namespace

TrackAnnotations load_jams_annotations(const std::filesystem::path& path,
                                       const StringConfig& cfg) {
    cfg.validate();
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open annotation file: " + path.string());
    json root;
    try {
        f >> root;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed JAMS file " + path.string() + ": " + e.what());
    }
    if (!root.contains("annotations")) {
        throw std::runtime_error("JAMS file has no annotations array: " + path.string());
    }

    TrackAnnotations out;
    bool saw_notes[6] = {};
    bool saw_pitch[6] = {};

    for (const auto& ann : root.at("annotations")) {
        if (!ann.contains("namespace") || !ann.contains("data")) continue;
        const std::string ns = ann.at("namespace").get<std::string>();
        if (ns != "note_midi" && ns != "pitch_contour") continue;
        const int string = string_index_of(ann);
        if (string < 0 || string >= 6) {
            throw std::runtime_error("annotation without a valid string data_source in " +
                                     path.string());
        }
        for (const auto& rec : ann.at("data")) {
            const double time = rec.at("time").get<double>();
            if (ns == "note_midi") {
                const double duration = rec.at("duration").get<double>();
                const double midi = rec.at("value").get<double>();
                const int fret =
                    static_cast<int>(std::lround(midi - cfg.open_string_pitches[string]));
                if (fret < 0 || fret > cfg.n_frets) {
                    throw std::runtime_error(
                        "track rejected: note at " + std::to_string(time) + "s on string " +
                        std::to_string(string) + " maps to fret " + std::to_string(fret) +
                        " outside [0, " + std::to_string(cfg.n_frets) + "] in " + path.string());
                }
                out.notes.push_back(make_note(string, fret, time, time + duration, cfg));
            } else {
                const double midi = observation_pitch_midi(rec.at("value"));
                if (midi > 0.0) {
                    out.observations.push_back(PitchObservation{time, midi, string});
                }
            }
        }
        (ns == "note_midi" ? saw_notes : saw_pitch)[string] = true;
    }

    for (int s = 0; s < 6; ++s) {
        if (!saw_notes[s] || !saw_pitch[s]) {
            throw std::runtime_error("track rejected: missing note_midi/pitch_contour namespace "
                                     "for string " +
                                     std::to_string(s) + " in " + path.string());
        }
    }

    std::sort(out.notes.begin(), out.notes.end(),
              [](const StampedNote& a, const StampedNote& b) { return a.onset < b.onset; });
    std::sort(out.observations.begin(), out.observations.end(),
              [](const PitchObservation& a, const PitchObservation& b) {
                  return a.time < b.time;
              });
    return out;
}

std::pair<AudioClip, TrackAnnotations> load_guitarset_track(
    const std::filesystem::path& annotation_path, const std::filesystem::path& audio_path,
    const StringConfig& cfg) {
    return {load_audio(audio_path), load_jams_annotations(annotation_path, cfg)};
}

void write_note_records(const std::filesystem::path& path,
                        const std::vector<NoteRecord>& records) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write note records: " + path.string());
    for (const auto& rec : records) {
        json contour = json::array();
        for (const auto& [t, p] : rec.contour) {
            contour.push_back({{"time_s", t}, {"pitch_midi", p}});
        }
        json line = {{"string", rec.note.string},
                     {"fret", rec.note.fret},
                     {"onset_s", rec.note.onset},
                     {"offset_s", rec.note.offset},
                     {"contour", contour}};
        f << line.dump() << '\n';
    }
}

std::vector<NoteRecord> read_note_records(const std::filesystem::path& path,
                                          const StringConfig& cfg) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open note records: " + path.string());
    std::vector<NoteRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("bad JSON at " + path.string() + ":" +
                                     std::to_string(line_no) + ": " + e.what());
        }
        NoteRecord rec;
        rec.note = make_note(j.at("string").get<int>(), j.at("fret").get<int>(),
                             j.at("onset_s").get<double>(), j.at("offset_s").get<double>(), cfg);
        for (const auto& pt : j.at("contour")) {
            rec.contour.emplace_back(pt.at("time_s").get<double>(),
                                     pt.at("pitch_midi").get<double>());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

TrackAnnotations annotations_from_records(const std::vector<NoteRecord>& records) {
    TrackAnnotations out;
    for (const auto& rec : records) {
        out.notes.push_back(rec.note);
        for (const auto& [t, p] : rec.contour) {
            out.observations.push_back(PitchObservation{t, p, rec.note.string});
        }
    }
    std::sort(out.observations.begin(), out.observations.end(),
              [](const PitchObservation& a, const PitchObservation& b) {
                  return a.time < b.time;
              });
    return out;
}

}  // namespace frettrace
