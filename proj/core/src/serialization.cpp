#include "frettrace/serialization.hpp"

#include <cstring>
#include <stdexcept>

namespace frettrace::io {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void read_exact(std::istream& is, void* dst, std::size_t n) {
    is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw std::runtime_error("unexpected end of stream while reading binary block");
    }
}
}  // namespace

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
    return fnv1a(std::as_bytes(std::span<const char>(s.data(), s.size())), seed);
}

std::uint64_t fnv1a(std::span<const float> values, std::uint64_t seed) {
    return fnv1a(std::as_bytes(values), seed);
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u64(os, bits);
}

void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_f32_block(std::ostream& os, std::span<const float> v) {
    write_u64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void write_f64_block(std::ostream& os, std::span<const double> v) {
    write_u64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    read_exact(is, b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    read_exact(is, b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& is) {
    const std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::string read_string(std::istream& is) {
    const std::uint64_t n = read_u64(is);
    std::string s(n, '\0');
    read_exact(is, s.data(), n);
    return s;
}

std::vector<float> read_f32_block(std::istream& is) {
    const std::uint64_t n = read_u64(is);
    std::vector<float> v(n);
    read_exact(is, v.data(), n * sizeof(float));
    return v;
}

std::vector<double> read_f64_block(std::istream& is) {
    const std::uint64_t n = read_u64(is);
    std::vector<double> v(n);
    read_exact(is, v.data(), n * sizeof(double));
    return v;
}

}  // namespace frettrace::io
