#pragma once

// Flat `key = value` text with optional `[section]` headers and '#' comments.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dronetile {

struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct KeyValueSection {
    std::string name;  // empty for entries before the first header
    std::size_t line = 0;
    std::vector<KeyValue> entries;
};

/// The first element is always the unnamed top-level section.
std::vector<KeyValueSection> parse_key_values(std::string_view text);

}  // namespace dronetile
