#include "config_file.hpp"

#include "dronetile/error.hpp"

#include <charconv>
#include <cmath>
#include <algorithm>
#include <array>
#include <fstream>
#include <string_view>

namespace dronetile::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

constexpr std::array<std::string_view, 27> kKnownKeys = {
    "border_margin", "class_agnostic", "confidence_divisor", "delta_e_max", "fp_rate",
    "fraction",      "jitter_px",      "jobs",               "keep_birds",  "match_iou",
    "max_instances", "min_resized_area", "miss_prob",        "nms_iou",     "no_interpolate",
    "resize_to",     "scale_max",      "scale_min",          "score_max",   "score_min",
    "score_threshold", "seed",         "skip_failed_frames", "timeout_ms",  "veto_iou",
    "whole_only",    "window",
};

}  // namespace

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read config `" + path + "`");
    ConfigFile cfg;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path + ": expected `key = value`", n);
        std::string key = trim(line.substr(0, eq));
        for (char& c : key)
            if (c == '-') c = '_';
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
            throw ParseError(path + ": unknown key `" + key + "`", n);
        cfg.values_[key] = trim(line.substr(eq + 1));
        cfg.lines_[key] = n;
    }
    return cfg;
}

double ConfigFile::number(const std::optional<double>& cli, const std::string& key,
                          double fallback) const {
    if (cli) return *cli;
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    double v = 0;
    const std::string& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError("config key `" + key + "` is not a number", lines_.at(key));
    return v;
}

long long ConfigFile::integer(const std::optional<long long>& cli, const std::string& key,
                              long long fallback) const {
    if (cli) return *cli;
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    long long v = 0;
    const std::string& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("config key `" + key + "` is not an integer", lines_.at(key));
    return v;
}

bool ConfigFile::flag(bool cli, const std::string& key) const {
    if (cli) return true;
    auto it = values_.find(key);
    if (it == values_.end()) return false;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ParseError("config key `" + key + "` is not a boolean", lines_.at(key));
}

}  // namespace dronetile::cli
