#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace glov {

std::string trim(std::string_view s);

// Trims both ends and collapses every internal whitespace run to one space.
// Case is preserved.
std::string normalize_text(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

std::string to_lower(std::string_view s);

std::uint64_t fnv1a64(std::string_view bytes);

std::string hex64(std::uint64_t value);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace glov
