#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dronetile {

/// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Inputs that parse but do not fit together (unknown video, window missing from plan, ...).
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The detector boundary failed. `output` holds whatever the child wrote, for diagnosis.
class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& what, std::string output = {})
        : std::runtime_error(what), output_(std::move(output)) {}

    const std::string& output() const noexcept { return output_; }

private:
    std::string output_;
};

}  // namespace dronetile
