#include "dronetile/ingest.hpp"

#include "dronetile/error.hpp"
#include "text_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

namespace dronetile {

namespace fs = std::filesystem;

// --- ground truth ---------------------------------------------------------------------------

GroundTruth parse_gt_file(std::string_view text, std::string video_id) {
    GroundTruth gt;
    gt.video_id = std::move(video_id);
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(text)) {
        ++line_no;
        const std::string_view line = strip_comment(raw);
        if (line.empty()) continue;
        const auto f = split_ws(line);
        if (f.size() != 5) throw ParseError("expected `frame x y w h`", line_no);
        const std::int64_t frame = parse_int64(f[0], line_no);
        if (frame < 0) throw ParseError("negative frame index", line_no);
        const double x = parse_double(f[1], line_no);
        const double y = parse_double(f[2], line_no);
        const double w = parse_double(f[3], line_no);
        const double h = parse_double(f[4], line_no);
        if (w < 0) throw ParseError("negative width", line_no);
        if (h < 0) throw ParseError("negative height", line_no);
        gt.entries[frame].push_back(BoundingBox::from_xywh(x, y, w, h));
    }
    return gt;
}

std::string serialize_gt(const GroundTruth& gt) {
    std::string out;
    for (const auto& [frame, boxes] : gt.entries) {
        for (const BoundingBox& b : boxes) {
            out += std::to_string(frame);
            for (double v : {b.x1(), b.y1(), b.width(), b.height()}) {
                out += ' ';
                out += format_shortest(v);
            }
            out += '\n';
        }
    }
    return out;
}

std::map<std::string, GroundTruth> load_gt_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ParseError("ground-truth directory `" + dir + "` not found");
    std::map<std::string, GroundTruth> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        const std::string video = entry.path().stem().string();
        try {
            out[video] = parse_gt_file(read_file(entry.path().string()), video);
        } catch (const ParseError& e) {
            throw ParseError(entry.path().string() + ": " + e.what());
        }
    }
    return out;
}

// --- normalised labels ----------------------------------------------------------------------

std::vector<LabeledBox> parse_normalized_label(std::string_view text, int image_w, int image_h) {
    if (image_w <= 0 || image_h <= 0) throw std::invalid_argument("image size must be positive");
    std::vector<LabeledBox> out;
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(text)) {
        ++line_no;
        const std::string_view line = strip_comment(raw);
        if (line.empty()) continue;
        const auto f = split_ws(line);
        if (f.size() != 5) throw ParseError("expected `class_id cx cy w h`", line_no);
        const std::int64_t cls = parse_int64(f[0], line_no);
        if (cls != 0 && cls != 1)
            throw ParseError("unknown class id " + std::to_string(cls), line_no);
        double v[4];
        for (int i = 0; i < 4; ++i) {
            v[i] = parse_double(f[static_cast<std::size_t>(i) + 1], line_no);
            if (v[i] < 0.0 || v[i] > 1.0)
                throw ParseError("normalised value outside [0,1]", line_no);
        }
        const double cx = v[0], cy = v[1], w = v[2], h = v[3];
        out.push_back({cls == 0 ? Label::drone : Label::bird,
                       BoundingBox((cx - w / 2) * image_w, (cy - h / 2) * image_h,
                                   (cx + w / 2) * image_w, (cy + h / 2) * image_h)});
    }
    return out;
}

std::string serialize_normalized_label(const std::vector<LabeledBox>& boxes, int image_w,
                                       int image_h) {
    if (image_w <= 0 || image_h <= 0) throw std::invalid_argument("image size must be positive");
    std::string out;
    for (const LabeledBox& lb : boxes) {
        const BoundingBox& b = lb.box;
        const double vals[4] = {(b.x1() + b.x2()) / 2 / image_w, (b.y1() + b.y2()) / 2 / image_h,
                                b.width() / image_w, b.height() / image_h};
        out += lb.label == Label::drone ? '0' : '1';
        for (double v : vals) {
            out += ' ';
            out += format_fixed(v, 6);
        }
        out += '\n';
    }
    return out;
}

// --- detections JSONL -------------------------------------------------------------------------

DetectionRecord to_record(const std::string& video, const Detection& d) {
    DetectionRecord r;
    r.video = video;
    r.frame = d.frame;
    r.label = d.label;
    r.x = d.box.x1();
    r.y = d.box.y1();
    r.w = d.box.width();
    r.h = d.box.height();
    r.score = d.score;
    r.source = d.source;
    return r;
}

Detection to_detection(const DetectionRecord& r) {
    Detection d;
    d.box = BoundingBox::from_xywh(r.x, r.y, r.w, r.h);
    d.label = r.label;
    d.score = r.score;
    d.frame = r.frame;
    d.source = r.source;
    return d;
}

namespace {

using json = nlohmann::ordered_json;

const json& require(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing field `") + key + "`", line);
    return *it;
}

double require_number(const json& obj, const char* key, std::size_t line) {
    const json& v = require(obj, key, line);
    if (!v.is_number()) throw ParseError(std::string("field `") + key + "` must be a number", line);
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(std::string("field `") + key + "` is not finite", line);
    return d;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
    const json& v = require(obj, key, line);
    if (!v.is_string()) throw ParseError(std::string("field `") + key + "` must be a string", line);
    return v.get<std::string>();
}

const std::set<std::string> kKnownFields = {"video", "frame", "label", "x",     "y",
                                            "w",     "h",     "score", "source"};

DetectionRecord parse_record(std::string_view line, std::size_t line_no, bool lenient) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);

    DetectionRecord r;
    r.video = require_string(obj, "video", line_no);

    const json& frame = require(obj, "frame", line_no);
    if (!frame.is_number_integer()) throw ParseError("field `frame` must be an integer", line_no);
    r.frame = frame.get<std::int64_t>();
    if (r.frame < 0) throw ParseError("field `frame` must be non-negative", line_no);

    const std::string label = require_string(obj, "label", line_no);
    auto parsed_label = parse_label(label);
    if (!parsed_label) throw ParseError("unknown label `" + label + "`", line_no);
    r.label = *parsed_label;

    r.x = require_number(obj, "x", line_no);
    r.y = require_number(obj, "y", line_no);
    r.w = require_number(obj, "w", line_no);
    r.h = require_number(obj, "h", line_no);
    if (r.w < 0 || r.h < 0) throw ParseError("negative box size", line_no);
    if (!std::isfinite(r.x + r.w) || !std::isfinite(r.y + r.h))
        throw ParseError("box corner overflows", line_no);

    r.score = require_number(obj, "score", line_no);
    if (r.score < 0.0 || r.score > 1.0) throw ParseError("score outside [0,1]", line_no);

    const std::string source = require_string(obj, "source", line_no);
    auto parsed_source = parse_source(source);
    if (!parsed_source) throw ParseError("unknown source `" + source + "`", line_no);
    r.source = *parsed_source;

    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (kKnownFields.contains(it.key())) continue;
        if (!lenient) throw ParseError("unknown field `" + it.key() + "`", line_no);
        r.extra.emplace_back(it.key(), it.value().dump());
    }
    return r;
}

}  // namespace

std::vector<DetectionRecord> parse_detections(std::string_view text, bool lenient) {
    std::vector<DetectionRecord> out;
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(text)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        out.push_back(parse_record(line, line_no, lenient));
    }
    return out;
}

std::vector<DetectionRecord> read_detections(const std::string& path, bool lenient) {
    try {
        return parse_detections(read_file(path), lenient);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string serialize_detection(const DetectionRecord& r) {
    std::string out = "{\"video\":";
    out += nlohmann::json(r.video).dump();
    out += ",\"frame\":" + std::to_string(r.frame);
    out += ",\"label\":\"";
    out += to_string(r.label);
    out += "\",\"x\":" + format_shortest(r.x);
    out += ",\"y\":" + format_shortest(r.y);
    out += ",\"w\":" + format_shortest(r.w);
    out += ",\"h\":" + format_shortest(r.h);
    out += ",\"score\":" + format_fixed(r.score, 6);
    out += ",\"source\":\"" + to_string(r.source) + '"';
    for (const auto& [key, value] : r.extra) {
        out += ',';
        out += nlohmann::json(key).dump();
        out += ':';
        out += value;
    }
    out += '}';
    return out;
}

std::string serialize_detections(const std::vector<DetectionRecord>& records) {
    std::string out;
    for (const DetectionRecord& r : records) {
        out += serialize_detection(r);
        out += '\n';
    }
    return out;
}

void write_detections(const std::string& path, const std::vector<DetectionRecord>& records) {
    write_file(path, serialize_detections(records));
}

void canonical_sort(std::vector<DetectionRecord>& records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const DetectionRecord& a, const DetectionRecord& b) {
                         if (a.video != b.video) return a.video < b.video;
                         if (a.frame != b.frame) return a.frame < b.frame;
                         if (a.score != b.score) return a.score > b.score;
                         const auto ka = std::tie(a.x, a.y, a.w, a.h);
                         const auto kb = std::tie(b.x, b.y, b.w, b.h);
                         if (ka != kb) return ka < kb;
                         if (a.label != b.label) return a.label < b.label;
                         return a.source < b.source;
                     });
}

std::map<std::string, std::vector<Detection>> group_by_video(
    const std::vector<DetectionRecord>& records) {
    std::map<std::string, std::vector<Detection>> out;
    for (const DetectionRecord& r : records) out[r.video].push_back(to_detection(r));
    return out;
}

// --- manifests --------------------------------------------------------------------------------

std::vector<FrameEntry> parse_manifest(std::string_view text, const std::string& base_dir) {
    std::vector<FrameEntry> out;
    std::map<std::string, std::int64_t> last_frame;
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(text)) {
        ++line_no;
        const std::string_view line = strip_comment(raw);
        if (line.empty()) continue;
        const auto f = split_ws(line);
        if (f.size() != 3) throw ParseError("expected `video frame path`", line_no);
        FrameEntry e;
        e.video = std::string(f[0]);
        e.frame = parse_int64(f[1], line_no);
        if (e.frame < 0) throw ParseError("negative frame index", line_no);
        fs::path p{std::string(f[2])};
        if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
        e.path = p.string();
        if (auto it = last_frame.find(e.video); it != last_frame.end() && e.frame <= it->second)
            throw ParseError("frame indices must increase within video `" + e.video + "`",
                             line_no);
        last_frame[e.video] = e.frame;
        out.push_back(std::move(e));
    }
    return out;
}

std::string serialize_manifest(const std::vector<FrameEntry>& entries) {
    std::string out;
    for (const FrameEntry& e : entries)
        out += e.video + ' ' + std::to_string(e.frame) + ' ' + e.path + '\n';
    return out;
}

std::vector<std::int64_t> subsample_frames(const std::vector<std::int64_t>& frame_indices,
                                           std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("stride must be positive");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < frame_indices.size(); i += stride) out.push_back(frame_indices[i]);
    return out;
}

std::vector<FrameEntry> subsample_manifest(const std::vector<FrameEntry>& entries,
                                           std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("stride must be positive");
    std::map<std::string, std::size_t> position;
    std::vector<FrameEntry> out;
    for (const FrameEntry& e : entries)
        if (position[e.video]++ % stride == 0) out.push_back(e);
    return out;
}

}  // namespace dronetile
