#pragma once

#include "dronetile/geometry.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dronetile {

/// Drone boxes per frame of one video.
struct GroundTruth {
    std::string video_id;
    std::map<std::int64_t, std::vector<BoundingBox>> entries;

    std::size_t box_count() const;
};

struct ScoredFlag {
    double score = 0.0;
    bool true_positive = false;
};

enum class ApInterpolation { all_points, eleven_point };

struct VideoScore {
    double ap50 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t n_gt = 0;
};

struct EvalReport {
    std::map<std::string, VideoScore> per_video;
    double average_ap50 = 0.0;  // unweighted mean over videos
};

/// Greedy matching of one frame. Detections are visited by descending score; each takes the
/// unmatched ground-truth box of highest IoU, provided that IoU is at least `iou_min`.
/// Result flags are parallel to the score-sorted order and carry their scores.
std::vector<ScoredFlag> match_detections(std::span<const Detection> dets,
                                         std::span<const BoundingBox> gts, double iou_min = 0.5);

/// Area under the precision envelope. Ties in score rank false positives first.
/// With no ground truth: 1.0 if there are also no detections, else 0.0.
double average_precision(std::span<const ScoredFlag> flags, std::size_t n_gt,
                         ApInterpolation interp = ApInterpolation::all_points);

/// Per-video AP for the drone label and the unweighted average across videos. Every video
/// with ground truth is scored; detections of a video without ground truth raise
/// StructuralError.
EvalReport evaluate(const std::map<std::string, std::vector<Detection>>& detections,
                    const std::map<std::string, GroundTruth>& ground_truth,
                    double iou_min = 0.5,
                    ApInterpolation interp = ApInterpolation::all_points);

/// `video,ap50,tp,fp,fn,n_gt` rows followed by an `average` row.
std::string format_report_csv(const EvalReport& report);

/// Human-readable per-video table.
std::string format_report_table(const EvalReport& report);

}  // namespace dronetile
