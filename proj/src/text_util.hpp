#pragma once

// Small text helpers shared by the line-oriented parsers.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dronetile {

/// Splits on '\n', dropping a trailing '\r'. A final newline does not yield an empty line.
std::vector<std::string_view> split_lines(std::string_view text);

/// Removes a '#' comment and surrounding whitespace.
std::string_view strip_comment(std::string_view line);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split_ws(std::string_view line);

/// Strict numeric parsing: the whole token must be consumed; NaN and infinities are rejected.
/// Errors are reported as ParseError at `line`.
double parse_double(std::string_view token, std::size_t line);
std::int64_t parse_int64(std::string_view token, std::size_t line);
int parse_int(std::string_view token, std::size_t line);

/// Shortest representation that reads back to the same double.
std::string format_shortest(double v);

/// Fixed notation with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace dronetile
