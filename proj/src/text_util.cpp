#include "text_util.hpp"

#include "dronetile/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace dronetile {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n\v\f";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view line) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    return trim(line);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_double(std::string_view token, std::size_t line) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || token.empty())
        throw ParseError("not a number: `" + std::string(token) + "`", line);
    if (!std::isfinite(v)) throw ParseError("non-finite value `" + std::string(token) + "`", line);
    return v;
}

std::int64_t parse_int64(std::string_view token, std::size_t line) {
    std::int64_t v = 0;
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), last, v);
    if (ec != std::errc{} || ptr != last || token.empty())
        throw ParseError("not an integer: `" + std::string(token) + "`", line);
    return v;
}

int parse_int(std::string_view token, std::size_t line) {
    const std::int64_t v = parse_int64(token, line);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ParseError("integer out of range: `" + std::string(token) + "`", line);
    return static_cast<int>(v);
}

std::string format_shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string out(buf, ptr);
    if (out == "-0") out = "0";
    return out;
}

std::string format_fixed(double v, int decimals) {
    char buf[128];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    std::string out(buf, ptr);
    if (out.starts_with('-') && out.find_first_not_of("-0.") == std::string::npos)
        out.erase(0, 1);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read `" + path + "`");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write `" + path + "`");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for `" + path + "`");
}

}  // namespace dronetile
