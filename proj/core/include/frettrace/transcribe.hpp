#pragma once

#include <filesystem>

#include "frettrace/decoding.hpp"
#include "frettrace/model.hpp"

namespace frettrace {

/// End-to-end deterministic transcription with a loaded checkpoint:
/// features -> windows -> heads -> thresholding -> note decoding -> contours.
/// The checkpoint's feature mode decides the front end; a missing onset head
/// switches to clustered decoding.
TranscriptionResult transcribe_clip(const AudioClip& clip, TabModel& model,
                                    const FeatureConfig& fcfg, const LossConfig& lcfg,
                                    const StringConfig& scfg,
                                    const DecodingConfig& dcfg = {});

/// Loads audio and checkpoint from disk, writes the JSON-lines result (and
/// optionally the binary frame grid next to it).
void transcribe_file(const std::filesystem::path& audio_path,
                     const std::filesystem::path& checkpoint_path,
                     const std::filesystem::path& output_path, bool export_frame_grid = false);

}  // namespace frettrace
