#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rangesel {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
std::vector<std::string> read_lines(const std::string& path);

/// FNV-1a 64-bit content digest, rendered as 16 hex characters.
std::uint64_t fnv1a(std::string_view data);
std::string hex_digest(std::string_view data);

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

}  // namespace rangesel
