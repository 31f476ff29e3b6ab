#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace semrel::text {

bool is_valid_utf8(std::string_view bytes);

// Decodes well-formed UTF-8; callers validate first.
std::vector<char32_t> decode_utf8(std::string_view bytes);
void append_utf8(std::string& out, char32_t cp);

bool is_unicode_space(char32_t cp);

// Trims Unicode whitespace from both ends.
std::string_view trim(std::string_view s);

// Splits on runs of Unicode whitespace; empty pieces are dropped.
std::vector<std::string> split_whitespace(std::string_view s);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t value);

// Shortest representation that round-trips to the same double.
std::string format_shortest(double value);
std::string format_fixed(double value, int decimals);

}  // namespace semrel::text
