#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stacksense::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
// Splits on runs of blanks.
std::vector<std::string_view> split_ws(std::string_view s);
// Splits into lines, dropping a trailing CR from each (CRLF input).
std::vector<std::string_view> lines(std::string_view s);

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);
bool starts_with_word(std::string_view line, std::string_view word);

// Whole-string parses; nullopt on any junk.
std::optional<std::uint64_t> parse_hex(std::string_view s);
std::optional<std::uint64_t> parse_dec(std::string_view s);
std::optional<double> parse_double(std::string_view s);

std::string to_hex(std::uint64_t v);
// Shortest representation that round-trips.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace stacksense::text
