#pragma once

#include "dronetile/geometry.hpp"

#include <array>
#include <iosfwd>
#include <string>

namespace dronetile {

/// One crop window of a frame. Integer pixel geometry; corners are indexed 0..3 in
/// reading order (top-left, top-right, bottom-left, bottom-right).
struct Window {
    Source source;  // full or tile(i)
    int origin_x = 0;
    int origin_y = 0;
    int width = 0;
    int height = 0;

    BoundingBox box() const {
        return {double(origin_x), double(origin_y), double(origin_x + width),
                double(origin_y + height)};
    }

    friend bool operator==(const Window&, const Window&) = default;
};

/// Full frame followed by the four corner-anchored tiles.
struct TilePlan {
    int frame_width = 0;
    int frame_height = 0;
    double fraction = 0.55;
    std::array<Window, 5> windows;

    const Window& full() const { return windows[0]; }
    const Window& tile(int i) const { return windows.at(static_cast<std::size_t>(i) + 1); }

    /// Window that produced detections tagged with `source`; nullptr when absent.
    const Window* find(const Source& source) const noexcept;
};

inline constexpr double kDefaultTileFraction = 0.55;

/// Each corner tile spans ceil(fraction * dimension) pixels. Throws std::invalid_argument
/// when width or height < 2 or fraction is outside [0.5, 1.0).
TilePlan plan_tiles(int width, int height, double fraction = kDefaultTileFraction);

/// One window per line: `kind origin_x origin_y width height`, kind being
/// `full` or `corner0`..`corner3`.
std::string format_plan(const TilePlan& plan);

/// Inverse of format_plan. Frame size and fraction are recovered from the windows.
TilePlan parse_plan(const std::string& text);

}  // namespace dronetile
