#include "frettrace/flac_reader.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frettrace::flac {

namespace {

class BitReader {
public:
    explicit BitReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    bool eof() const { return byte_pos_ >= bytes_.size(); }

    std::uint64_t bits(unsigned n) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < n; ++i) {
            if (byte_pos_ >= bytes_.size()) {
                throw std::runtime_error("FLAC: unexpected end of stream");
            }
            v = (v << 1) | ((bytes_[byte_pos_] >> (7 - bit_pos_)) & 1u);
            if (++bit_pos_ == 8) {
                bit_pos_ = 0;
                ++byte_pos_;
            }
        }
        return v;
    }

    std::int64_t signed_bits(unsigned n) {
        std::uint64_t v = bits(n);
        if (n > 0 && (v & (std::uint64_t(1) << (n - 1)))) {
            v |= ~std::uint64_t(0) << n;
        }
        return static_cast<std::int64_t>(v);
    }

    std::uint64_t unary() {
        std::uint64_t q = 0;
        while (bits(1) == 0) ++q;
        return q;
    }

    void align_to_byte() {
        if (bit_pos_ != 0) {
            bit_pos_ = 0;
            ++byte_pos_;
        }
    }

    void skip_bytes(std::size_t n) {
        align_to_byte();
        byte_pos_ += n;
    }

    std::size_t byte_position() const { return byte_pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t byte_pos_ = 0;
    unsigned bit_pos_ = 0;
};

struct StreamInfo {
    std::uint32_t sample_rate = 0;
    std::uint32_t channels = 0;
    std::uint32_t bits_per_sample = 0;
    std::uint64_t total_samples = 0;
};

std::uint64_t read_coded_number(BitReader& br) {
    const std::uint64_t b0 = br.bits(8);
    unsigned extra = 0;
    std::uint64_t v = 0;
    if ((b0 & 0x80) == 0) {
        return b0;
    } else if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        v = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        v = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        v = b0 & 0x07;
    } else if ((b0 & 0xFC) == 0xF8) {
        extra = 4;
        v = b0 & 0x03;
    } else if ((b0 & 0xFE) == 0xFC) {
        extra = 5;
        v = b0 & 0x01;
    } else if (b0 == 0xFE) {
        extra = 6;
        v = 0;
    } else {
        throw std::runtime_error("FLAC: invalid coded number");
    }
    for (unsigned i = 0; i < extra; ++i) {
        const std::uint64_t b = br.bits(8);
        if ((b & 0xC0) != 0x80) throw std::runtime_error("FLAC: invalid coded number byte");
        v = (v << 6) | (b & 0x3F);
    }
    return v;
}

void decode_residual(BitReader& br, unsigned order, unsigned block_size,
                     std::vector<std::int64_t>& out) {
    const unsigned method = static_cast<unsigned>(br.bits(2));
    if (method > 1) throw std::runtime_error("FLAC: reserved residual coding method");
    const unsigned param_bits = method == 0 ? 4 : 5;
    const unsigned escape = method == 0 ? 0x0F : 0x1F;
    const unsigned partition_order = static_cast<unsigned>(br.bits(4));
    const unsigned partitions = 1u << partition_order;
    if (block_size % partitions != 0) {
        throw std::runtime_error("FLAC: block size not divisible by partition count");
    }
    std::size_t idx = order;
    for (unsigned p = 0; p < partitions; ++p) {
        unsigned count = block_size >> partition_order;
        if (p == 0) {
            if (count < order) throw std::runtime_error("FLAC: bad first partition size");
            count -= order;
        }
        const unsigned rice = static_cast<unsigned>(br.bits(param_bits));
        if (rice == escape) {
            const unsigned raw_bits = static_cast<unsigned>(br.bits(5));
            for (unsigned i = 0; i < count; ++i) {
                out[idx++] = raw_bits == 0 ? 0 : br.signed_bits(raw_bits);
            }
        } else {
            for (unsigned i = 0; i < count; ++i) {
                const std::uint64_t q = br.unary();
                const std::uint64_t r = rice == 0 ? 0 : br.bits(rice);
                const std::uint64_t zig = (q << rice) | r;
                out[idx++] = static_cast<std::int64_t>(zig >> 1) ^
                             -static_cast<std::int64_t>(zig & 1);
            }
        }
    }
}

void decode_subframe(BitReader& br, unsigned block_size, unsigned bps,
                     std::vector<std::int64_t>& samples) {
    if (br.bits(1) != 0) throw std::runtime_error("FLAC: bad subframe padding bit");
    const unsigned type = static_cast<unsigned>(br.bits(6));
    unsigned wasted = 0;
    if (br.bits(1) == 1) {
        wasted = 1 + static_cast<unsigned>(br.unary());
    }
    if (wasted >= bps) throw std::runtime_error("FLAC: wasted bits exceed sample size");
    const unsigned eff_bps = bps - wasted;

    samples.assign(block_size, 0);
    if (type == 0) {  // CONSTANT
        const std::int64_t v = br.signed_bits(eff_bps);
        samples.assign(block_size, v);
    } else if (type == 1) {  // VERBATIM
        for (unsigned i = 0; i < block_size; ++i) samples[i] = br.signed_bits(eff_bps);
    } else if ((type & 0x38) == 0x08 && (type & 0x07) <= 4) {  // FIXED
        const unsigned order = type & 0x07;
        for (unsigned i = 0; i < order; ++i) samples[i] = br.signed_bits(eff_bps);
        decode_residual(br, order, block_size, samples);
        for (unsigned i = order; i < block_size; ++i) {
            std::int64_t pred = 0;
            switch (order) {
                case 0: pred = 0; break;
                case 1: pred = samples[i - 1]; break;
                case 2: pred = 2 * samples[i - 1] - samples[i - 2]; break;
                case 3:
                    pred = 3 * samples[i - 1] - 3 * samples[i - 2] + samples[i - 3];
                    break;
                case 4:
                    pred = 4 * samples[i - 1] - 6 * samples[i - 2] + 4 * samples[i - 3] -
                           samples[i - 4];
                    break;
                default: break;
            }
            samples[i] += pred;
        }
    } else if (type >= 0x20) {  // LPC
        const unsigned order = (type & 0x1F) + 1;
        for (unsigned i = 0; i < order; ++i) samples[i] = br.signed_bits(eff_bps);
        const unsigned precision = static_cast<unsigned>(br.bits(4)) + 1;
        if (precision == 16) throw std::runtime_error("FLAC: invalid LPC precision");
        const int shift = static_cast<int>(br.signed_bits(5));
        if (shift < 0) throw std::runtime_error("FLAC: negative LPC shift");
        std::vector<std::int64_t> coefs(order);
        for (unsigned i = 0; i < order; ++i) coefs[i] = br.signed_bits(precision);
        decode_residual(br, order, block_size, samples);
        for (unsigned i = order; i < block_size; ++i) {
            std::int64_t acc = 0;
            for (unsigned j = 0; j < order; ++j) acc += coefs[j] * samples[i - 1 - j];
            samples[i] += acc >> shift;
        }
    } else {
        throw std::runtime_error("FLAC: reserved subframe type " + std::to_string(type));
    }

    if (wasted > 0) {
        for (auto& s : samples) s <<= wasted;
    }
}

unsigned frame_block_size(BitReader& br, unsigned code) {
    switch (code) {
        case 1: return 192;
        case 2: case 3: case 4: case 5: return 576u << (code - 2);
        case 6: return static_cast<unsigned>(br.bits(8)) + 1;
        case 7: return static_cast<unsigned>(br.bits(16)) + 1;
        default:
            if (code >= 8) return 256u << (code - 8);
            throw std::runtime_error("FLAC: reserved block size code");
    }
}

unsigned frame_sample_rate(BitReader& br, unsigned code, const StreamInfo& info) {
    static const unsigned table[12] = {0,     88200, 176400, 192000, 8000,  16000,
                                       22050, 24000, 32000,  44100,  48000, 96000};
    if (code == 0) return info.sample_rate;
    if (code < 12) return table[code];
    if (code == 12) return static_cast<unsigned>(br.bits(8)) * 1000;
    if (code == 13) return static_cast<unsigned>(br.bits(16));
    if (code == 14) return static_cast<unsigned>(br.bits(16)) * 10;
    throw std::runtime_error("FLAC: invalid sample rate code");
}

unsigned frame_sample_size(unsigned code, const StreamInfo& info) {
    switch (code) {
        case 0: return info.bits_per_sample;
        case 1: return 8;
        case 2: return 12;
        case 4: return 16;
        case 5: return 20;
        case 6: return 24;
        case 7: return 32;
        default: throw std::runtime_error("FLAC: reserved sample size code");
    }
}

}  // namespace

Decoded decode(const std::vector<std::uint8_t>& bytes) {
    BitReader br(bytes);
    if (br.bits(32) != 0x664C6143u) {  // "fLaC"
        throw std::runtime_error("FLAC: missing stream marker");
    }

    StreamInfo info;
    bool have_streaminfo = false;
    bool last = false;
    while (!last) {
        last = br.bits(1) != 0;
        const unsigned type = static_cast<unsigned>(br.bits(7));
        const std::size_t length = static_cast<std::size_t>(br.bits(24));
        if (type == 0) {
            br.bits(16);  // min block size
            br.bits(16);  // max block size
            br.bits(24);  // min frame size
            br.bits(24);  // max frame size
            info.sample_rate = static_cast<std::uint32_t>(br.bits(20));
            info.channels = static_cast<std::uint32_t>(br.bits(3)) + 1;
            info.bits_per_sample = static_cast<std::uint32_t>(br.bits(5)) + 1;
            info.total_samples = br.bits(36);
            br.skip_bytes(16);  // MD5
            have_streaminfo = true;
        } else {
            br.skip_bytes(length);
        }
    }
    if (!have_streaminfo) throw std::runtime_error("FLAC: missing STREAMINFO");
    if (info.channels == 0 || info.channels > 8) {
        throw std::runtime_error("FLAC: unsupported channel count");
    }

    Decoded out;
    out.sample_rate = info.sample_rate;
    out.bits_per_sample = info.bits_per_sample;
    out.channels.resize(info.channels);

    std::uint64_t decoded_samples = 0;
    std::vector<std::vector<std::int64_t>> chan(info.channels);
    while (!br.eof() && (info.total_samples == 0 || decoded_samples < info.total_samples)) {
        // frame header
        if (br.bits(14) != 0x3FFE) throw std::runtime_error("FLAC: lost frame sync");
        br.bits(1);  // reserved
        br.bits(1);  // blocking strategy
        const unsigned bs_code = static_cast<unsigned>(br.bits(4));
        const unsigned sr_code = static_cast<unsigned>(br.bits(4));
        const unsigned chan_assign = static_cast<unsigned>(br.bits(4));
        const unsigned ss_code = static_cast<unsigned>(br.bits(3));
        br.bits(1);  // reserved
        read_coded_number(br);
        const unsigned block_size = frame_block_size(br, bs_code);
        frame_sample_rate(br, sr_code, info);
        const unsigned bps = frame_sample_size(ss_code, info);
        br.bits(8);  // header CRC-8

        unsigned n_channels = info.channels;
        if (chan_assign >= 8 && chan_assign <= 10) {
            n_channels = 2;
        } else if (chan_assign < 8) {
            n_channels = chan_assign + 1;
        } else {
            throw std::runtime_error("FLAC: reserved channel assignment");
        }
        if (n_channels != info.channels) {
            throw std::runtime_error("FLAC: frame channel count differs from STREAMINFO");
        }

        for (unsigned c = 0; c < n_channels; ++c) {
            unsigned sub_bps = bps;
            if ((chan_assign == 8 && c == 1) || (chan_assign == 9 && c == 0) ||
                (chan_assign == 10 && c == 1)) {
                ++sub_bps;  // side channel carries one extra bit
            }
            decode_subframe(br, block_size, sub_bps, chan[c]);
        }
        br.align_to_byte();
        br.bits(16);  // frame CRC-16

        // undo stereo decorrelation
        if (chan_assign == 8) {  // left/side
            for (unsigned i = 0; i < block_size; ++i) chan[1][i] = chan[0][i] - chan[1][i];
        } else if (chan_assign == 9) {  // right/side
            for (unsigned i = 0; i < block_size; ++i) chan[0][i] = chan[1][i] + chan[0][i];
        } else if (chan_assign == 10) {  // mid/side
            for (unsigned i = 0; i < block_size; ++i) {
                const std::int64_t side = chan[1][i];
                std::int64_t mid = (chan[0][i] << 1) | (side & 1);
                chan[0][i] = (mid + side) >> 1;
                chan[1][i] = (mid - side) >> 1;
            }
        }

        for (unsigned c = 0; c < info.channels; ++c) {
            for (unsigned i = 0; i < block_size; ++i) {
                out.channels[c].push_back(static_cast<std::int32_t>(chan[c][i]));
            }
        }
        decoded_samples += block_size;
    }

    return out;
}

}  // namespace frettrace::flac
