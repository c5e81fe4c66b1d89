#include "dronetile/pipeline.hpp"

#include "dronetile/error.hpp"

#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

namespace dronetile {

FrameLoader disk_loader() {
    return [](const FrameEntry& e) {
        cv::Mat img = cv::imread(e.path, cv::IMREAD_COLOR);
        if (img.empty()) throw ParseError("cannot read frame `" + e.path + "`");
        return img;
    };
}

DetectionRecord through_wire(const DetectionRecord& r) {
    return parse_detections(serialize_detection(r), true).front();
}

namespace {

struct FrameOutcome {
    std::vector<DetectionRecord> raw;
    int width = 0;
    int height = 0;
    std::optional<std::string> backend_error;
};

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<DetectionRecord> fuse_frame_records(const std::vector<DetectionRecord>& raw,
                                                const std::string& video, std::int64_t frame,
                                                const TilePlan& plan, const FusionConfig& cfg) {
    WindowDetections per_source;
    for (const DetectionRecord& r : raw) per_source[r.source].push_back(to_detection(r));
    std::vector<DetectionRecord> out;
    for (const Detection& d : fuse_frame(per_source, plan, cfg)) {
        Detection g = d;
        g.frame = frame;
        out.push_back(through_wire(to_record(video, g)));
    }
    return out;
}

}  // namespace

PipelineResult detect_manifest(const std::vector<FrameEntry>& manifest, const Detector& detector,
                               const PipelineConfig& cfg, const FrameLoader& loader) {
    std::vector<FrameOutcome> outcomes(manifest.size());
    parallel_for(manifest.size(), cfg.jobs, [&](std::size_t i) {
        const FrameEntry& entry = manifest[i];
        FrameOutcome& out = outcomes[i];
        const cv::Mat pixels = loader(entry);
        out.width = pixels.cols;
        out.height = pixels.rows;
        const TilePlan plan = plan_tiles(pixels.cols, pixels.rows, cfg.tile_fraction);
        FrameContext ctx{entry.video, entry.frame, pixels.cols, pixels.rows,
                         detector.needs_pixels() ? &pixels : nullptr};
        const std::size_t n_windows = cfg.whole_only ? 1 : plan.windows.size();
        try {
            for (std::size_t w = 0; w < n_windows; ++w)
                for (const Detection& d : detector.detect(ctx, plan.windows[w]))
                    out.raw.push_back(through_wire(to_record(entry.video, d)));
        } catch (const BackendError& e) {
            out.raw.clear();
            out.backend_error = e.what();
        }
    });

    PipelineResult result;
    std::set<std::string> aborted;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const FrameEntry& entry = manifest[i];
        const FrameOutcome& o = outcomes[i];
        auto [it, inserted] = result.frame_sizes.try_emplace(entry.video, o.width, o.height);
        if (!inserted && it->second != std::pair{o.width, o.height})
            throw StructuralError("frame size changes within video `" + entry.video + "`");
        if (o.backend_error) {
            result.failures.push_back({entry.video, entry.frame, *o.backend_error});
            if (!cfg.skip_failed_frames) aborted.insert(entry.video);
        }
    }
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (aborted.contains(manifest[i].video)) continue;
        result.raw.insert(result.raw.end(), outcomes[i].raw.begin(), outcomes[i].raw.end());
    }
    result.aborted_videos.assign(aborted.begin(), aborted.end());
    canonical_sort(result.raw);
    return result;
}

std::vector<DetectionRecord> fuse_records(const std::vector<DetectionRecord>& raw,
                                          const TilePlan& plan, const FusionConfig& cfg) {
    std::map<std::pair<std::string, std::int64_t>, std::vector<DetectionRecord>> by_frame;
    for (const DetectionRecord& r : raw) by_frame[{r.video, r.frame}].push_back(r);
    std::vector<DetectionRecord> out;
    for (const auto& [key, records] : by_frame) {
        auto fused = fuse_frame_records(records, key.first, key.second, plan, cfg);
        out.insert(out.end(), fused.begin(), fused.end());
    }
    canonical_sort(out);
    return out;
}

std::map<std::string, std::vector<std::int64_t>> manifest_timelines(
    const std::vector<FrameEntry>& manifest) {
    std::map<std::string, std::vector<std::int64_t>> out;
    for (const FrameEntry& e : manifest) out[e.video].push_back(e.frame);
    return out;
}

std::vector<DetectionRecord> interpolate_records(
    const std::vector<DetectionRecord>& fused, int frame_width, int frame_height,
    const TemporalConfig& cfg, const std::map<std::string, std::vector<std::int64_t>>& timelines,
    int stride) {
    if (stride < 1) throw std::invalid_argument("stride must be positive");
    std::map<std::string, VideoDetections> videos;
    for (const DetectionRecord& r : fused) {
        VideoDetections& v = videos[r.video];
        v.video_id = r.video;
        v.frames[r.frame].push_back(to_detection(r));
    }

    std::vector<DetectionRecord> out;
    for (auto& [video, v] : videos) {
        v.frame_width = frame_width;
        v.frame_height = frame_height;
        v.frame_stride = stride;
        if (auto t = timelines.find(video); t != timelines.end()) {
            for (std::int64_t f : t->second) v.frames[f];
        } else if (!v.frames.empty()) {
            const std::int64_t first = v.frames.begin()->first;
            const std::int64_t last = v.frames.rbegin()->first;
            for (std::int64_t f = first; f <= last; f += stride) v.frames[f];
        }
        const VideoDetections filled = interpolate_gaps(v, cfg);
        for (const auto& [frame, dets] : filled.frames)
            for (const Detection& d : dets) out.push_back(through_wire(to_record(video, d)));
    }
    canonical_sort(out);
    return out;
}

PipelineResult run_pipeline(const std::vector<FrameEntry>& manifest, const Detector& detector,
                            const PipelineConfig& cfg, const FrameLoader& loader) {
    cfg.fusion.validate();
    cfg.temporal.validate();
    PipelineResult result = detect_manifest(manifest, detector, cfg, loader);

    std::map<std::string, std::vector<DetectionRecord>> raw_by_video;
    for (const DetectionRecord& r : result.raw) raw_by_video[r.video].push_back(r);

    const auto timelines = manifest_timelines(manifest);
    for (const auto& [video, size] : result.frame_sizes) {
        if (std::binary_search(result.aborted_videos.begin(), result.aborted_videos.end(), video))
            continue;
        const TilePlan plan = plan_tiles(size.first, size.second, cfg.tile_fraction);
        const auto fused = fuse_records(raw_by_video[video], plan, cfg.fusion);
        result.fused.insert(result.fused.end(), fused.begin(), fused.end());

        if (cfg.interpolate) {
            std::map<std::string, std::vector<std::int64_t>> timeline;
            timeline[video] = timelines.at(video);
            const auto filled =
                interpolate_records(fused, size.first, size.second, cfg.temporal, timeline);
            result.final.insert(result.final.end(), filled.begin(), filled.end());
        } else {
            result.final.insert(result.final.end(), fused.begin(), fused.end());
        }
    }
    canonical_sort(result.fused);
    canonical_sort(result.final);
    return result;
}

}  // namespace dronetile
