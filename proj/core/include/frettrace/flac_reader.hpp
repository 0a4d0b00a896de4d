#pragma once

#include <cstdint>
#include <vector>

namespace frettrace::flac {

struct Decoded {
    std::vector<std::vector<std::int32_t>> channels;
    std::uint32_t sample_rate = 0;
    std::uint32_t bits_per_sample = 0;
};

/// Decodes a native FLAC stream (constant, verbatim, fixed and LPC
/// subframes; 4-bit and 5-bit Rice partitions; wasted bits; left/right/mid
/// stereo decorrelation). CRCs are parsed but not verified.
Decoded decode(const std::vector<std::uint8_t>& bytes);

}  // namespace frettrace::flac
