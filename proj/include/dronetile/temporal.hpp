#pragma once

#include "dronetile/geometry.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dronetile {

/// Fused detections of one video, one entry per processed frame (empty lists included).
struct VideoDetections {
    std::string video_id;
    int frame_width = 0;
    int frame_height = 0;
    std::map<std::int64_t, std::vector<Detection>> frames;
    int frame_stride = 1;

    std::size_t detection_count() const;
};

struct TemporalConfig {
    int window = 6;                 // timeline positions searched on each side
    double match_iou = 0.1;         // endpoint pair must overlap at least this much
    double border_margin = 0.02;    // fraction of max(frame width, height)
    double veto_iou = 0.3;          // reject if overlapping an existing detection this much
    double confidence_divisor = 2.0;

    void validate() const;
};

/// Fill detection gaps by linear interpolation between a bracketing pair of same-label,
/// overlapping detections found within `window` positions before and after each frame.
/// Only original detections seed interpolation; originals are never altered.
VideoDetections interpolate_gaps(const VideoDetections& video, const TemporalConfig& cfg);

}  // namespace dronetile
