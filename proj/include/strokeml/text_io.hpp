#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace strokeml {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

std::string to_lower(std::string_view text);
std::string_view trim(std::string_view text);

/// Splits one CSV line on commas, honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace strokeml
