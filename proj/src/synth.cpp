#include "dronetile/synth.hpp"

#include "dronetile/error.hpp"
#include "keyvalue.hpp"
#include "text_util.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace dronetile {

BoundingBox TrackSpec::box_at(std::int64_t t) const {
    const double cx = start_x + vx * double(t);
    const double cy = start_y + vy * double(t);
    return {cx - width / 2, cy - height / 2, cx + width / 2, cy + height / 2};
}

void validate_scene(const SceneSpec& spec) {
    if (spec.width < 2 || spec.height < 2) throw std::invalid_argument("frame must be at least 2x2");
    if (spec.n_frames < 0) throw std::invalid_argument("frame count must be non-negative");
    for (std::size_t i = 0; i < spec.tracks.size(); ++i) {
        const TrackSpec& tr = spec.tracks[i];
        if (!(tr.width > 0 && tr.height > 0))
            throw std::invalid_argument("track " + std::to_string(i) + ": size must be positive");
        if (tr.last_frame < tr.first_frame)
            throw std::invalid_argument("track " + std::to_string(i) + ": last frame before first");
        for (std::int64_t t = std::max<std::int64_t>(0, tr.first_frame);
             t <= tr.last_frame && t < spec.n_frames; ++t) {
            const BoundingBox b = tr.box_at(t);
            if (b.x1() < 0 || b.y1() < 0 || b.x2() > spec.width || b.y2() > spec.height)
                throw std::invalid_argument("track " + std::to_string(i) + " leaves the frame at frame " +
                                            std::to_string(t));
        }
    }
}

namespace {

cv::Mat render_background(const SceneSpec& spec) {
    cv::Mat bg(spec.height, spec.width, CV_8UC3);
    switch (spec.background) {
        case Background::flat:
            bg.setTo(cv::Scalar(200, 190, 170));
            break;
        case Background::gradient:
            for (int y = 0; y < bg.rows; ++y) {
                const auto v = static_cast<std::uint8_t>(140 + 100 * y / std::max(1, bg.rows - 1));
                bg.row(y).setTo(cv::Scalar(v, v, std::min(255, v + 10)));
            }
            break;
        case Background::noise: {
            std::mt19937_64 rng(spec.seed);
            std::uniform_int_distribution<int> n(150, 230);
            for (int y = 0; y < bg.rows; ++y) {
                auto* row = bg.ptr<cv::Vec3b>(y);
                for (int x = 0; x < bg.cols; ++x) {
                    const auto v = static_cast<std::uint8_t>(n(rng));
                    row[x] = cv::Vec3b(v, v, v);
                }
            }
            break;
        }
    }
    return bg;
}

// Pixels whose centres fall inside the box.
cv::Rect raster_rect(const BoundingBox& b) {
    const int x1 = int(std::ceil(b.x1() - 0.5));
    const int y1 = int(std::ceil(b.y1() - 0.5));
    const int x2 = int(std::ceil(b.x2() - 0.5));
    const int y2 = int(std::ceil(b.y2() - 0.5));
    return {x1, y1, std::max(0, x2 - x1), std::max(0, y2 - y1)};
}

}  // namespace

GroundTruth scene_truth(const SceneSpec& spec) {
    validate_scene(spec);
    GroundTruth gt;
    gt.video_id = spec.video_id;
    for (std::int64_t t = 0; t < spec.n_frames; ++t)
        for (const TrackSpec& tr : spec.tracks)
            if (tr.alive(t) && tr.label == Label::drone) gt.entries[t].push_back(tr.box_at(t));
    return gt;
}

Scene generate_scene(const SceneSpec& spec) {
    Scene scene;
    scene.truth = scene_truth(spec);
    const cv::Mat bg = render_background(spec);
    const cv::Rect bounds(0, 0, spec.width, spec.height);
    for (std::int64_t t = 0; t < spec.n_frames; ++t) {
        cv::Mat frame = bg.clone();
        for (const TrackSpec& tr : spec.tracks) {
            if (!tr.alive(t)) continue;
            const cv::Scalar color = tr.label == Label::drone ? cv::Scalar(25, 25, 25)
                                                              : cv::Scalar(30, 60, 110);
            frame(raster_rect(tr.box_at(t)) & bounds).setTo(color);
        }
        scene.frames.push_back(std::move(frame));
    }
    return scene;
}

namespace {

std::pair<double, double> parse_pair(const std::string& v, std::size_t line) {
    const auto comma = v.find(',');
    if (comma == std::string::npos) throw ParseError("expected `a,b`", line);
    return {parse_double(trim(std::string_view(v).substr(0, comma)), line),
            parse_double(trim(std::string_view(v).substr(comma + 1)), line)};
}

}  // namespace

SceneSpec parse_scene_spec(std::string_view text) {
    SceneSpec spec;
    bool size_seen = false;
    for (const KeyValueSection& section : parse_key_values(text)) {
        if (section.name.empty()) {
            for (const KeyValue& kv : section.entries) {
                const std::size_t ln = kv.line;
                if (kv.key == "video") spec.video_id = kv.value;
                else if (kv.key == "width") spec.width = parse_int(kv.value, ln);
                else if (kv.key == "height") spec.height = parse_int(kv.value, ln);
                else if (kv.key == "frames") spec.n_frames = parse_int64(kv.value, ln);
                else if (kv.key == "seed") spec.seed = static_cast<std::uint64_t>(parse_int64(kv.value, ln));
                else if (kv.key == "background") {
                    if (kv.value == "flat") spec.background = Background::flat;
                    else if (kv.value == "gradient") spec.background = Background::gradient;
                    else if (kv.value == "noise") spec.background = Background::noise;
                    else throw ParseError("unknown background `" + kv.value + "`", ln);
                } else {
                    throw ParseError("unknown key `" + kv.key + "`", ln);
                }
            }
            continue;
        }
        if (section.name != "track") throw ParseError("unknown section [" + section.name + "]", section.line);
        TrackSpec tr;
        tr.last_frame = -1;
        bool last_seen = false;
        size_seen = false;
        for (const KeyValue& kv : section.entries) {
            const std::size_t ln = kv.line;
            if (kv.key == "label") {
                auto l = parse_label(kv.value);
                if (!l) throw ParseError("unknown label `" + kv.value + "`", ln);
                tr.label = *l;
            } else if (kv.key == "start") {
                std::tie(tr.start_x, tr.start_y) = parse_pair(kv.value, ln);
            } else if (kv.key == "velocity") {
                std::tie(tr.vx, tr.vy) = parse_pair(kv.value, ln);
            } else if (kv.key == "size") {
                std::tie(tr.width, tr.height) = parse_pair(kv.value, ln);
                size_seen = true;
            } else if (kv.key == "first") {
                tr.first_frame = parse_int64(kv.value, ln);
            } else if (kv.key == "last") {
                tr.last_frame = parse_int64(kv.value, ln);
                last_seen = true;
            } else {
                throw ParseError("unknown key `" + kv.key + "`", ln);
            }
        }
        if (!size_seen) throw ParseError("track without `size`", section.line);
        if (!last_seen) tr.last_frame = spec.n_frames - 1;
        spec.tracks.push_back(tr);
    }
    return spec;
}

}  // namespace dronetile
