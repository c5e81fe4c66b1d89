#include "dronetile/fusion.hpp"

#include "dronetile/error.hpp"

#include <algorithm>
#include <stdexcept>

namespace dronetile {

void FusionConfig::validate() const {
    if (!(nms_iou >= 0.0 && nms_iou <= 1.0))
        throw std::invalid_argument("nms_iou must lie in [0,1]");
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
        throw std::invalid_argument("score_threshold must lie in [0,1]");
}

bool canonical_less(const Detection& a, const Detection& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    if (a.box != b.box) return a.box < b.box;
    if (a.label != b.label) return a.label < b.label;
    if (a.source != b.source) return a.source < b.source;
    return a.frame < b.frame;
}

std::vector<Detection> fuse_frame(const WindowDetections& per_source, const TilePlan& plan,
                                  const FusionConfig& cfg) {
    cfg.validate();
    const double fw = plan.frame_width;
    const double fh = plan.frame_height;

    std::vector<Detection> pooled;
    for (const auto& [source, dets] : per_source) {
        const Window* window = plan.find(source);
        if (window == nullptr)
            throw StructuralError("detections reference window `" + to_string(source) +
                                  "` which is not part of the tile plan");
        for (const Detection& d : dets) {
            Detection g = remap(d, window->origin_x, window->origin_y);
            g.box = clip(g.box, fw, fh);
            g.source = source;
            if (g.score < cfg.score_threshold) continue;
            pooled.push_back(g);
        }
    }

    // Sorting first makes NMS independent of the order sources were supplied in.
    std::sort(pooled.begin(), pooled.end(), canonical_less);
    std::vector<Detection> kept = nms(pooled, cfg.nms_iou, cfg.class_aware);
    std::erase_if(kept, [&](const Detection& d) { return !cfg.report_labels.contains(d.label); });
    std::sort(kept.begin(), kept.end(), canonical_less);
    return kept;
}

}  // namespace dronetile
