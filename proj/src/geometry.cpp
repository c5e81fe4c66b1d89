#include "dronetile/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dronetile {

BoundingBox::BoundingBox(double x1, double y1, double x2, double y2)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
    if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2))
        throw std::invalid_argument("bounding box coordinates must be finite");
    if (x2 < x1 || y2 < y1)
        throw std::invalid_argument("bounding box has negative extent");
}

BoundingBox BoundingBox::from_xywh(double x, double y, double w, double h) {
    if (w < 0 || h < 0)
        throw std::invalid_argument("bounding box has negative extent");
    return {x, y, x + w, y + h};
}

BoundingBox BoundingBox::translated(double dx, double dy) const {
    return {x1_ + dx, y1_ + dy, x2_ + dx, y2_ + dy};
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    if (w <= 0 || h <= 0) return 0.0;
    return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox clip(const BoundingBox& b, double width, double height) {
    if (!(width > 0) || !(height > 0))
        throw std::invalid_argument("clip bounds must be positive");
    auto cx = [width](double v) { return std::clamp(v, 0.0, width); };
    auto cy = [height](double v) { return std::clamp(v, 0.0, height); };
    return {cx(b.x1()), cy(b.y1()), cx(b.x2()), cy(b.y2())};
}

std::string_view to_string(Label label) noexcept {
    return label == Label::drone ? "drone" : "bird";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
    if (text == "drone") return Label::drone;
    if (text == "bird") return Label::bird;
    return std::nullopt;
}

std::string to_string(const Source& source) {
    switch (source.kind) {
        case Source::Kind::full: return "full";
        case Source::Kind::tile: return "tile" + std::to_string(source.tile);
        case Source::Kind::interpolated: return "interpolated";
    }
    return "full";
}

std::optional<Source> parse_source(std::string_view text) noexcept {
    if (text == "full") return Source::full();
    if (text == "interpolated") return Source::interpolated();
    if (text.size() == 5 && text.starts_with("tile")) {
        const char c = text[4];
        if (c >= '0' && c <= '3') return Source::tile_at(c - '0');
    }
    return std::nullopt;
}

Detection remap(const Detection& d, double origin_x, double origin_y) {
    Detection out = d;
    out.box = d.box.translated(origin_x, origin_y);
    return out;
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold,
                           bool class_aware) {
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0))
        throw std::invalid_argument("nms threshold must lie in [0,1]");

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<Detection> kept;
    for (std::size_t idx : order) {
        const Detection& cand = dets[idx];
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            if (class_aware && k.label != cand.label) return false;
            return iou(k.box, cand.box) >= iou_threshold;
        });
        if (!suppressed) kept.push_back(cand);
    }
    return kept;
}

}  // namespace dronetile
