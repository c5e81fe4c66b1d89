#include "dronetile/tiling.hpp"

#include "dronetile/error.hpp"
#include "text_util.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dronetile {

namespace {

// 0.55 * 640 evaluates to 352.00000000000006 in binary floating point; the slack keeps
// exact products from rounding up a whole pixel.
int ceil_fraction(double fraction, int dimension) {
    return static_cast<int>(std::ceil(fraction * dimension - 1e-9));
}

}  // namespace

const Window* TilePlan::find(const Source& source) const noexcept {
    for (const Window& w : windows)
        if (w.source == source) return &w;
    return nullptr;
}

TilePlan plan_tiles(int width, int height, double fraction) {
    if (width < 2 || height < 2)
        throw std::invalid_argument("frame must be at least 2x2 pixels");
    if (!(fraction >= 0.5 && fraction < 1.0))
        throw std::invalid_argument("tile fraction must lie in [0.5, 1.0)");

    const int tw = ceil_fraction(fraction, width);
    const int th = ceil_fraction(fraction, height);
    const int right = width - tw;
    const int bottom = height - th;

    TilePlan plan;
    plan.frame_width = width;
    plan.frame_height = height;
    plan.fraction = fraction;
    plan.windows = {
        Window{Source::full(), 0, 0, width, height},
        Window{Source::tile_at(0), 0, 0, tw, th},
        Window{Source::tile_at(1), right, 0, tw, th},
        Window{Source::tile_at(2), 0, bottom, tw, th},
        Window{Source::tile_at(3), right, bottom, tw, th},
    };
    return plan;
}

std::string format_plan(const TilePlan& plan) {
    std::ostringstream out;
    for (const Window& w : plan.windows) {
        if (w.source.kind == Source::Kind::full)
            out << "full";
        else
            out << "corner" << w.source.tile;
        out << ' ' << w.origin_x << ' ' << w.origin_y << ' ' << w.width << ' ' << w.height
            << '\n';
    }
    return out.str();
}

TilePlan parse_plan(const std::string& text) {
    TilePlan plan;
    bool seen[5] = {false, false, false, false, false};
    std::size_t line_no = 0;
    for (std::string_view line : split_lines(text)) {
        ++line_no;
        line = strip_comment(line);
        if (line.empty()) continue;
        auto fields = split_ws(line);
        if (fields.size() != 5) throw ParseError("expected `kind x y w h`", line_no);
        int slot;
        Source src;
        if (fields[0] == "full") {
            slot = 0;
            src = Source::full();
        } else if (fields[0].size() == 7 && fields[0].starts_with("corner") &&
                   fields[0][6] >= '0' && fields[0][6] <= '3') {
            slot = fields[0][6] - '0' + 1;
            src = Source::tile_at(slot - 1);
        } else {
            throw ParseError("unknown window kind `" + std::string(fields[0]) + "`", line_no);
        }
        if (seen[slot]) throw ParseError("duplicate window", line_no);
        seen[slot] = true;
        Window w{src, parse_int(fields[1], line_no), parse_int(fields[2], line_no),
                 parse_int(fields[3], line_no), parse_int(fields[4], line_no)};
        if (w.width <= 0 || w.height <= 0) throw ParseError("window must be non-empty", line_no);
        plan.windows[static_cast<std::size_t>(slot)] = w;
    }
    for (bool s : seen)
        if (!s) throw ParseError("plan must list full and corner0..corner3");

    const Window& full = plan.windows[0];
    if (full.origin_x != 0 || full.origin_y != 0)
        throw ParseError("full window must start at the origin");
    plan.frame_width = full.width;
    plan.frame_height = full.height;
    plan.fraction = double(plan.windows[1].width) / full.width;
    for (const Window& w : plan.windows) {
        if (w.origin_x < 0 || w.origin_y < 0 || w.origin_x + w.width > full.width ||
            w.origin_y + w.height > full.height)
            throw ParseError("window exceeds the frame");
    }
    return plan;
}

}  // namespace dronetile
