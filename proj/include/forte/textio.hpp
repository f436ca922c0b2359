#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace forte {

// Shortest round-trip decimal form of a double ("%.17g" trimmed), identical
// across runs so serialized artifacts stay byte-stable.
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);

std::string read_file(const std::string& path);

// Write via temp file + rename so concurrent runs never observe partial files.
void write_file_atomic(const std::string& path, const std::string& contents);

// FNV-1a 64-bit, used for content-addressed caching and dataset fingerprints.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

}  // namespace forte
