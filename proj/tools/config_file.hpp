#pragma once

#include <map>
#include <optional>
#include <string>

namespace dronetile::cli {

/// Flat `key = value` settings loaded from `--config`. Keys use underscores.
class ConfigFile {
public:
    ConfigFile() = default;
    static ConfigFile load(const std::string& path);

    /// Command-line value wins, then the file, then `fallback`.
    double number(const std::optional<double>& cli, const std::string& key, double fallback) const;
    long long integer(const std::optional<long long>& cli, const std::string& key,
                      long long fallback) const;
    bool flag(bool cli, const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::size_t> lines_;
};

}  // namespace dronetile::cli
