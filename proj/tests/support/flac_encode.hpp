#pragma once

// Minimal FLAC encoder for decoder tests: fixed blocking, constant /
// verbatim / fixed-order-2 subframes, single Rice partition, optional
// left/side stereo. CRC fields are written as zero (the reader parses but
// does not verify them).

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace flac_encode {

class BitWriter {
public:
    void bits(std::uint64_t value, unsigned n) {
        for (unsigned i = n; i-- > 0;) {
            cur_ = static_cast<std::uint8_t>((cur_ << 1) | ((value >> i) & 1));
            if (++fill_ == 8) {
                out_.push_back(cur_);
                cur_ = 0;
                fill_ = 0;
            }
        }
    }
    void align() {
        while (fill_ != 0) bits(0, 1);
    }
    const std::vector<std::uint8_t>& bytes() const { return out_; }

private:
    std::vector<std::uint8_t> out_;
    std::uint8_t cur_ = 0;
    unsigned fill_ = 0;
};

enum class SubframeKind { kConstant, kVerbatim, kFixed2 };

inline void write_rice(BitWriter& bw, std::int64_t value, unsigned k) {
    const std::uint64_t zig =
        value >= 0 ? (static_cast<std::uint64_t>(value) << 1)
                   : ((static_cast<std::uint64_t>(-(value + 1)) << 1) | 1);
    const std::uint64_t q = zig >> k;
    for (std::uint64_t i = 0; i < q; ++i) bw.bits(0, 1);
    bw.bits(1, 1);
    if (k > 0) bw.bits(zig & ((std::uint64_t(1) << k) - 1), k);
}

inline void write_subframe(BitWriter& bw, const std::vector<std::int32_t>& x, unsigned bps,
                           SubframeKind kind) {
    bw.bits(0, 1);  // padding
    switch (kind) {
        case SubframeKind::kConstant:
            bw.bits(0, 6);
            bw.bits(0, 1);  // no wasted bits
            bw.bits(static_cast<std::uint64_t>(static_cast<std::uint32_t>(x[0])) &
                        ((std::uint64_t(1) << bps) - 1),
                    bps);
            break;
        case SubframeKind::kVerbatim:
            bw.bits(1, 6);
            bw.bits(0, 1);
            for (std::int32_t v : x) {
                bw.bits(static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) &
                            ((std::uint64_t(1) << bps) - 1),
                        bps);
            }
            break;
        case SubframeKind::kFixed2: {
            if (x.size() < 3) throw std::invalid_argument("fixed-2 needs >= 3 samples");
            bw.bits(0b001010, 6);
            bw.bits(0, 1);
            for (int i = 0; i < 2; ++i) {
                bw.bits(static_cast<std::uint64_t>(static_cast<std::uint32_t>(x[i])) &
                            ((std::uint64_t(1) << bps) - 1),
                        bps);
            }
            bw.bits(0, 2);  // rice method 0 (4-bit params)
            bw.bits(0, 4);  // partition order 0
            const unsigned k = 6;
            bw.bits(k, 4);
            for (std::size_t i = 2; i < x.size(); ++i) {
                const std::int64_t pred = 2LL * x[i - 1] - x[i - 2];
                write_rice(bw, x[i] - pred, k);
            }
            break;
        }
    }
}

/// Encodes per-channel 16-bit samples; all channels must share a length
/// that is a multiple of block_size. left_side encodes channel pairs as
/// left/side instead of independent channels.
inline std::vector<std::uint8_t> encode(const std::vector<std::vector<std::int32_t>>& channels,
                                        std::uint32_t sample_rate, SubframeKind kind,
                                        unsigned block_size = 4096, bool left_side = false) {
    if (channels.empty()) throw std::invalid_argument("no channels");
    const std::size_t n = channels[0].size();
    if (left_side && channels.size() != 2) throw std::invalid_argument("left/side needs stereo");

    BitWriter bw;
    bw.bits(0x664C6143, 32);  // fLaC
    // STREAMINFO, last metadata block
    bw.bits(1, 1);
    bw.bits(0, 7);
    bw.bits(34, 24);
    bw.bits(block_size, 16);
    bw.bits(block_size, 16);
    bw.bits(0, 24);
    bw.bits(0, 24);
    bw.bits(sample_rate, 20);
    bw.bits(channels.size() - 1, 3);
    bw.bits(16 - 1, 5);
    bw.bits(static_cast<std::uint64_t>(n), 36);
    for (int i = 0; i < 16; ++i) bw.bits(0, 8);  // MD5

    std::uint64_t frame_no = 0;
    for (std::size_t start = 0; start < n; start += block_size, ++frame_no) {
        const std::size_t count = std::min<std::size_t>(block_size, n - start);
        bw.bits(0x3FFE, 14);
        bw.bits(0, 1);  // reserved
        bw.bits(0, 1);  // fixed blocking
        bw.bits(7, 4);  // block size: 16-bit value follows
        bw.bits(0, 4);  // sample rate from STREAMINFO
        bw.bits(left_side ? 8 : channels.size() - 1, 4);
        bw.bits(4, 3);  // 16-bit samples
        bw.bits(0, 1);  // reserved
        if (frame_no > 127) throw std::invalid_argument("test encoder caps at 128 frames");
        bw.bits(frame_no, 8);       // UTF-8 single byte
        bw.bits(count - 1, 16);     // block size
        bw.bits(0, 8);              // header CRC (unverified by the reader)

        if (left_side) {
            std::vector<std::int32_t> left(count), side(count);
            for (std::size_t i = 0; i < count; ++i) {
                left[i] = channels[0][start + i];
                side[i] = channels[0][start + i] - channels[1][start + i];
            }
            write_subframe(bw, left, 16, kind);
            write_subframe(bw, side, 17, kind);
        } else {
            for (const auto& ch : channels) {
                std::vector<std::int32_t> block(ch.begin() + static_cast<long>(start),
                                                ch.begin() + static_cast<long>(start + count));
                write_subframe(bw, block, 16, kind);
            }
        }
        bw.align();
        bw.bits(0, 16);  // frame CRC (unverified)
    }
    bw.align();
    return bw.bytes();
}

}  // namespace flac_encode
