#pragma once

#include "dronetile/geometry.hpp"
#include "dronetile/tiling.hpp"

#include <map>
#include <set>
#include <vector>

namespace dronetile {

struct FusionConfig {
    double nms_iou = 0.1;
    double score_threshold = 0.375;
    std::set<Label> report_labels = {Label::drone};
    bool class_aware = true;

    /// Throws std::invalid_argument when a threshold is outside [0,1].
    void validate() const;
};

/// Raw detector output of one frame, keyed by the window it came from. Coordinates are
/// local to that window.
using WindowDetections = std::map<Source, std::vector<Detection>>;

/// Merge the five windows of one frame: remap + clip to the frame, drop scores below the
/// threshold, class-aware NMS over the pooled set, then keep only reported labels.
/// Output is ordered by descending score. Throws StructuralError when a key names a window
/// the plan does not contain.
std::vector<Detection> fuse_frame(const WindowDetections& per_source, const TilePlan& plan,
                                  const FusionConfig& cfg);

/// Deterministic total order used wherever detections are listed: score descending, then
/// box, label and source.
bool canonical_less(const Detection& a, const Detection& b) noexcept;

}  // namespace dronetile
