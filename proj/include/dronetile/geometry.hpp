#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dronetile {

/// Axis-aligned box in continuous pixel coordinates, origin top-left.
/// (x1, y1) inclusive, (x2, y2) exclusive, so width = x2 - x1 exactly.
class BoundingBox {
public:
    BoundingBox() = default;

    /// Throws std::invalid_argument on non-finite coordinates or negative extents.
    BoundingBox(double x1, double y1, double x2, double y2);

    static BoundingBox from_xywh(double x, double y, double w, double h);

    double x1() const noexcept { return x1_; }
    double y1() const noexcept { return y1_; }
    double x2() const noexcept { return x2_; }
    double y2() const noexcept { return y2_; }
    double width() const noexcept { return x2_ - x1_; }
    double height() const noexcept { return y2_ - y1_; }
    double area() const noexcept { return width() * height(); }

    BoundingBox translated(double dx, double dy) const;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
    /// Lexicographic on (x1, y1, x2, y2).
    friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;

private:
    double x1_ = 0.0;
    double y1_ = 0.0;
    double x2_ = 0.0;
    double y2_ = 0.0;
};

double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Intersection over union; 0 when the union is empty.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Intersection with [0,width]x[0,height]. A disjoint box collapses onto the nearest edge.
BoundingBox clip(const BoundingBox& b, double width, double height);

enum class Label : std::uint8_t { drone, bird };

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;

/// Which window produced a detection. Tiles are indexed 0..3; `interpolated`
/// is reserved for boxes synthesised by the temporal stage.
struct Source {
    enum class Kind : std::uint8_t { full, tile, interpolated };

    Kind kind = Kind::full;
    int tile = 0;

    static Source full() noexcept { return {Kind::full, 0}; }
    static Source tile_at(int i) noexcept { return {Kind::tile, i}; }
    static Source interpolated() noexcept { return {Kind::interpolated, 0}; }

    friend bool operator==(const Source&, const Source&) = default;
    friend auto operator<=>(const Source&, const Source&) = default;
};

/// "full", "tile0".."tile3", "interpolated".
std::string to_string(const Source& source);
std::optional<Source> parse_source(std::string_view text) noexcept;

struct Detection {
    BoundingBox box;
    Label label = Label::drone;
    double score = 0.0;
    std::int64_t frame = 0;
    Source source;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Translate a window-local detection into the coordinate frame of the window's parent.
Detection remap(const Detection& d, double origin_x, double origin_y);

/// Greedy NMS. Detections are visited by descending score (stable, so equal scores keep
/// input order) and kept iff their IoU with every kept detection is below `iou_threshold`.
/// With `class_aware` only detections sharing a label suppress each other.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold,
                           bool class_aware = true);

}  // namespace dronetile
