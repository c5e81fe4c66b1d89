#pragma once

#include "dronetile/backend.hpp"
#include "dronetile/evaluation.hpp"
#include "dronetile/fusion.hpp"
#include "dronetile/ingest.hpp"
#include "dronetile/temporal.hpp"
#include "dronetile/tiling.hpp"

#include <opencv2/core.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dronetile {

struct PipelineConfig {
    double tile_fraction = kDefaultTileFraction;
    bool whole_only = false;  // full frame only, no tiles
    FusionConfig fusion;
    TemporalConfig temporal;
    bool interpolate = true;
    int jobs = 1;
    bool skip_failed_frames = false;  // otherwise a backend error drops the whole video
};

/// Returns the decoded BGR frame for a manifest entry. The default reads `entry.path`.
using FrameLoader = std::function<cv::Mat(const FrameEntry&)>;

FrameLoader disk_loader();

struct BackendFailure {
    std::string video;
    std::int64_t frame = 0;
    std::string message;
};

struct PipelineResult {
    std::vector<DetectionRecord> raw;    // window-local backend output
    std::vector<DetectionRecord> fused;  // per-frame fusion, frame coordinates
    std::vector<DetectionRecord> final;  // after temporal interpolation
    std::map<std::string, std::pair<int, int>> frame_sizes;
    std::vector<BackendFailure> failures;
    std::vector<std::string> aborted_videos;
};

/// Every record list is in canonical order and every value has passed through the JSONL
/// wire format, so writing them reproduces exactly what the per-stage commands produce.
PipelineResult run_pipeline(const std::vector<FrameEntry>& manifest, const Detector& detector,
                            const PipelineConfig& cfg, const FrameLoader& loader = disk_loader());

/// Backend stage only: raw window-local detections for every manifest frame.
PipelineResult detect_manifest(const std::vector<FrameEntry>& manifest, const Detector& detector,
                               const PipelineConfig& cfg, const FrameLoader& loader = disk_loader());

/// Fusion stage over raw records, grouped by (video, frame). Canonical order.
std::vector<DetectionRecord> fuse_records(const std::vector<DetectionRecord>& raw,
                                          const TilePlan& plan, const FusionConfig& cfg);

/// Temporal stage over fused records. `timelines` lists the processed frames of each video;
/// videos absent from it use every frame between their first and last detection, stepping
/// by `stride`. Canonical order.
std::vector<DetectionRecord> interpolate_records(
    const std::vector<DetectionRecord>& fused, int frame_width, int frame_height,
    const TemporalConfig& cfg, const std::map<std::string, std::vector<std::int64_t>>& timelines,
    int stride = 1);

/// Per-video timelines of a manifest.
std::map<std::string, std::vector<std::int64_t>> manifest_timelines(
    const std::vector<FrameEntry>& manifest);

/// Serialise and re-parse, so in-memory values match what a file round trip yields.
DetectionRecord through_wire(const DetectionRecord& r);

// --- rendering ------------------------------------------------------------------------------

struct RenderReport {
    std::size_t written = 0;
    std::vector<std::string> errors;
};

/// Draws detections (colour by label, interpolated boxes dashed) and optional ground truth
/// onto each manifest frame, writing `<out_dir>/<video>/<file name>`. Frames without anything
/// to draw are copied unchanged. Boxes outside the frame are a per-frame error.
RenderReport render_annotations(const std::vector<FrameEntry>& manifest,
                                const std::vector<DetectionRecord>& detections,
                                const std::map<std::string, GroundTruth>* ground_truth,
                                const std::string& out_dir,
                                const FrameLoader& loader = disk_loader());

/// Draws onto `image` in place; exposed for tests.
void draw_annotations(cv::Mat& image, const std::vector<Detection>& detections,
                      const std::vector<BoundingBox>& ground_truth);

}  // namespace dronetile
