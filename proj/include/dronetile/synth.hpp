#pragma once

#include "dronetile/evaluation.hpp"
#include "dronetile/geometry.hpp"

#include <opencv2/core.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace dronetile {

struct TrackSpec {
    double start_x = 0, start_y = 0;  // box centre at frame 0
    double vx = 0, vy = 0;            // pixels per frame
    double width = 1, height = 1;
    Label label = Label::drone;
    std::int64_t first_frame = 0;
    std::int64_t last_frame = 0;

    bool alive(std::int64_t t) const noexcept { return t >= first_frame && t <= last_frame; }

    /// Box at absolute frame index `t`, centred at start + velocity * t.
    BoundingBox box_at(std::int64_t t) const;
};

enum class Background { flat, gradient, noise };

struct SceneSpec {
    std::string video_id = "synth";
    int width = 640;
    int height = 480;
    std::int64_t n_frames = 10;
    Background background = Background::flat;
    std::uint64_t seed = 0;  // noise background only
    std::vector<TrackSpec> tracks;
};

struct Scene {
    std::vector<cv::Mat> frames;  // CV_8UC3, frame t at index t
    GroundTruth truth;            // drone tracks only
};

/// Throws std::invalid_argument naming the track and frame when a box leaves the frame.
void validate_scene(const SceneSpec& spec);

/// Renders each live track as a filled rectangle. Birds are drawn but left out of the
/// ground truth.
Scene generate_scene(const SceneSpec& spec);

/// Ground truth only, without rendering.
GroundTruth scene_truth(const SceneSpec& spec);

/// Key = value text with `[track]` sections:
///
///     video = clip01
///     width = 1920
///     height = 1080
///     frames = 50
///     background = noise
///     seed = 3
///     [track]
///     label = drone
///     start = 100,100
///     velocity = 5,0
///     size = 20,20
///     first = 0
///     last = 49
SceneSpec parse_scene_spec(std::string_view text);

}  // namespace dronetile
