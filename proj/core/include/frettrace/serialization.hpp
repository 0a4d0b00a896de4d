#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace frettrace::io {

/// FNV-1a 64-bit hash; stable across platforms and runs.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::span<const float> values, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Little-endian binary primitives for the cache/checkpoint formats.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, const std::string& s);
void write_f32_block(std::ostream& os, std::span<const float> v);
void write_f64_block(std::ostream& os, std::span<const double> v);

std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);
std::vector<float> read_f32_block(std::istream& is);
std::vector<double> read_f64_block(std::istream& is);

}  // namespace frettrace::io
