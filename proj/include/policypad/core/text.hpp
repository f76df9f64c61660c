#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ppad::text {

std::string_view trim(std::string_view s);
bool is_blank(std::string_view s);

// Splits UTF-8 into code points. Invalid lead bytes are passed through as
// single-byte units rather than rejected.
std::vector<std::string> split_code_points(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split_words(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercase ASCII and collapse whitespace runs to one space.
std::string normalize(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);
inline std::string short_hash(std::string_view s) { return hex64(fnv1a64(s)); }

}  // namespace ppad::text
