#include "keyvalue.hpp"

#include "dronetile/error.hpp"
#include "text_util.hpp"

namespace dronetile {

std::vector<KeyValueSection> parse_key_values(std::string_view text) {
    std::vector<KeyValueSection> sections(1);
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(text)) {
        ++line_no;
        const std::string_view line = strip_comment(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) throw ParseError("malformed section header", line_no);
            sections.push_back({std::string(trim(line.substr(1, line.size() - 2))), line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected `key = value`", line_no);
        const std::string_view key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", line_no);
        sections.back().entries.push_back(
            {std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
    }
    return sections;
}

}  // namespace dronetile
