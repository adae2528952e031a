#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pde_embed {

std::string base64_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> base64_decode(const std::string& text); // throws std::invalid_argument

uint64_t fnv1a64(std::span<const uint8_t> bytes);

/// Little-endian raw bytes of an array of IEEE doubles.
std::vector<uint8_t> doubles_to_bytes(std::span<const double> v);
std::vector<double> bytes_to_doubles(std::span<const uint8_t> bytes); // size must be a multiple of 8

/// Shortest decimal form that round-trips a double exactly.
std::string fmt_g17(double v);

/// Write-then-rename so readers never observe a half-written file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path); // throws std::runtime_error on failure

} // namespace pde_embed
