#pragma once

#include "dronetile/evaluation.hpp"
#include "dronetile/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dronetile {

// --- Ground truth: `frame x y w h` per line, '#' comments ---------------------------------

GroundTruth parse_gt_file(std::string_view text, std::string video_id = {});
std::string serialize_gt(const GroundTruth& gt);

/// Loads every `<video>.txt` in `dir`, keyed by video id (the file stem).
std::map<std::string, GroundTruth> load_gt_dir(const std::string& dir);

// --- Normalised labels: `class_id cx cy w h`, class 0 = drone, 1 = bird -------------------

struct LabeledBox {
    Label label = Label::drone;
    BoundingBox box;

    friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

std::vector<LabeledBox> parse_normalized_label(std::string_view text, int image_w, int image_h);

/// Six decimals per value, the customary precision of these files.
std::string serialize_normalized_label(const std::vector<LabeledBox>& boxes, int image_w,
                                       int image_h);

// --- Detections interchange (JSON lines) ---------------------------------------------------

struct DetectionRecord {
    std::string video;
    std::int64_t frame = 0;
    Label label = Label::drone;
    double x = 0, y = 0, w = 0, h = 0;
    double score = 0;
    Source source;
    /// Unknown fields kept by lenient parsing, as (key, compact JSON value) in input order.
    std::vector<std::pair<std::string, std::string>> extra;

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

DetectionRecord to_record(const std::string& video, const Detection& d);
Detection to_detection(const DetectionRecord& r);

/// Throws ParseError (with line number) on malformed lines, missing fields, bad values,
/// and, unless `lenient`, unknown fields.
std::vector<DetectionRecord> parse_detections(std::string_view text, bool lenient = false);
std::vector<DetectionRecord> read_detections(const std::string& path, bool lenient = false);

/// One object per line, fields in fixed order, score with six decimals and coordinates in
/// shortest round-trip form.
std::string serialize_detection(const DetectionRecord& r);
std::string serialize_detections(const std::vector<DetectionRecord>& records);
void write_detections(const std::string& path, const std::vector<DetectionRecord>& records);

/// Sort by (video, frame, score desc, box, label, source).
void canonical_sort(std::vector<DetectionRecord>& records);

/// Group detections per video, preserving record order.
std::map<std::string, std::vector<Detection>> group_by_video(
    const std::vector<DetectionRecord>& records);

// --- Frame manifests: `video frame path` per line -----------------------------------------

struct FrameEntry {
    std::string video;
    std::int64_t frame = 0;
    std::string path;

    friend bool operator==(const FrameEntry&, const FrameEntry&) = default;
};

/// Relative paths are resolved against `base_dir` when it is non-empty. Frame indices must
/// increase strictly within each video.
std::vector<FrameEntry> parse_manifest(std::string_view text, const std::string& base_dir = {});
std::string serialize_manifest(const std::vector<FrameEntry>& entries);

/// Keeps positions 0, stride, 2*stride, ... Throws std::invalid_argument for stride 0.
std::vector<std::int64_t> subsample_frames(const std::vector<std::int64_t>& frame_indices,
                                           std::size_t stride = 5);

/// Applies subsample_frames to each video of a manifest independently.
std::vector<FrameEntry> subsample_manifest(const std::vector<FrameEntry>& entries,
                                           std::size_t stride);

}  // namespace dronetile
