#include "dronetile/error.hpp"
#include "dronetile/ingest.hpp"
#include "dronetile/pipeline.hpp"
#include "dronetile/synth.hpp"

#include <gtest/gtest.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

using namespace dronetile;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dronetile_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct InMemoryScene {
    SceneSpec spec;
    Scene scene;
    std::vector<FrameEntry> manifest;

    FrameLoader loader() const {
        return [this](const FrameEntry& e) { return scene.frames.at(std::size_t(e.frame)); };
    }
};

InMemoryScene make_scene(std::int64_t n_frames = 20) {
    InMemoryScene s;
    s.spec.video_id = "clip";
    s.spec.n_frames = n_frames;
    TrackSpec a;
    a.start_x = 100;
    a.start_y = 100;
    a.vx = 5;
    a.vy = 2;
    a.width = a.height = 24;
    a.last_frame = n_frames - 1;
    TrackSpec b = a;
    b.start_x = 500;
    b.start_y = 300;
    b.vx = -3;
    b.vy = 1;
    s.spec.tracks = {a, b};
    s.scene = generate_scene(s.spec);
    for (std::int64_t t = 0; t < n_frames; ++t)
        s.manifest.push_back({"clip", t, "frame_" + std::to_string(t) + ".png"});
    return s;
}

}  // namespace

TEST(Pipeline, PerfectMockGivesFullMap) {
    const InMemoryScene s = make_scene();
    const std::map<std::string, GroundTruth> gt = {{"clip", s.scene.truth}};
    MockDetector det(MockDetector::truth_from(gt), {});
    const PipelineResult result = run_pipeline(s.manifest, det, {}, s.loader());
    EXPECT_TRUE(result.failures.empty());
    EXPECT_EQ(result.final.size(), 40u);
    const EvalReport report = evaluate(group_by_video(result.final), gt);
    EXPECT_EQ(report.average_ap50, 1.0);
}

TEST(Pipeline, InterpolationRecoversDeletedFrames) {
    const InMemoryScene s = make_scene();
    std::map<std::string, GroundTruth> gt = {{"clip", s.scene.truth}};
    auto holed = MockDetector::truth_from(gt);
    for (std::int64_t t = 3; t < s.spec.n_frames - 1; t += 4) holed["clip"].erase(t);
    MockDetector det(holed, {});

    PipelineConfig off;
    off.interpolate = false;
    const PipelineResult without = run_pipeline(s.manifest, det, off, s.loader());
    const PipelineResult with = run_pipeline(s.manifest, det, {}, s.loader());
    EXPECT_LT(without.final.size(), with.final.size());
    EXPECT_EQ(with.final.size(), 40u);

    for (const DetectionRecord& r : with.final) {
        if (r.source != Source::interpolated()) continue;
        const Detection d = to_detection(r);
        const auto& truth = s.scene.truth.entries.at(r.frame);
        double best = 0;
        for (const BoundingBox& b : truth) best = std::max(best, iou(b, d.box));
        EXPECT_NEAR(best, 1.0, 1e-6) << "frame " << r.frame;
        EXPECT_NEAR(r.score, 0.9 / 2, 1e-6);
    }
}

TEST(Pipeline, EmptyManifest) {
    MockDetector det({}, {});
    const PipelineResult result = run_pipeline({}, det, {}, [](const FrameEntry&) { return cv::Mat(); });
    EXPECT_TRUE(result.raw.empty());
    EXPECT_TRUE(result.final.empty());
}

TEST(Pipeline, JobCountDoesNotChangeOutput) {
    const InMemoryScene s = make_scene(30);
    const std::map<std::string, GroundTruth> gt = {{"clip", s.scene.truth}};
    MockDetectorConfig mcfg;
    mcfg.miss_prob = 0.3;
    mcfg.fp_rate = 1;
    mcfg.jitter_px = 1.5;
    mcfg.score_range = {0.3, 1.0};
    mcfg.rng_seed = 4;
    MockDetector det(MockDetector::truth_from(gt), mcfg);
    PipelineConfig one;
    PipelineConfig many;
    many.jobs = 8;
    const PipelineResult a = run_pipeline(s.manifest, det, one, s.loader());
    const PipelineResult b = run_pipeline(s.manifest, det, many, s.loader());
    EXPECT_EQ(serialize_detections(a.raw), serialize_detections(b.raw));
    EXPECT_EQ(serialize_detections(a.final), serialize_detections(b.final));
}

TEST(Pipeline, StagesComposeToRunResult) {
    const InMemoryScene s = make_scene(25);
    const std::map<std::string, GroundTruth> gt = {{"clip", s.scene.truth}};
    MockDetectorConfig mcfg;
    mcfg.miss_prob = 0.25;
    mcfg.jitter_px = 0.7;
    mcfg.score_range = {0.3, 1.0};
    mcfg.rng_seed = 8;
    MockDetector det(MockDetector::truth_from(gt), mcfg);
    const PipelineConfig cfg;
    const PipelineResult full = run_pipeline(s.manifest, det, cfg, s.loader());
    const PipelineResult raw = detect_manifest(s.manifest, det, cfg, s.loader());
    const auto raw_text = serialize_detections(raw.raw);
    const auto fused = fuse_records(parse_detections(raw_text), plan_tiles(640, 480), cfg.fusion);
    EXPECT_EQ(serialize_detections(fused), serialize_detections(full.fused));
    const auto final = interpolate_records(parse_detections(serialize_detections(fused)), 640, 480,
                                           cfg.temporal, manifest_timelines(s.manifest));
    EXPECT_EQ(serialize_detections(final), serialize_detections(full.final));
}

TEST(Pipeline, BackendFailurePolicy) {
    class Flaky final : public Detector {
    public:
        bool needs_pixels() const override { return false; }
        std::vector<Detection> detect(const FrameContext& f, const Window& w) const override {
            if (f.frame == 2) throw BackendError("boom", "raw");
            return {{BoundingBox(10, 10, 20, 20), Label::drone, 0.9, f.frame, w.source}};
        }
    };
    const InMemoryScene s = make_scene(5);
    PipelineConfig cfg;
    const PipelineResult aborted = run_pipeline(s.manifest, Flaky{}, cfg, s.loader());
    EXPECT_EQ(aborted.aborted_videos, std::vector<std::string>{"clip"});
    EXPECT_TRUE(aborted.final.empty());
    EXPECT_FALSE(aborted.failures.empty());

    cfg.skip_failed_frames = true;
    const PipelineResult skipped = run_pipeline(s.manifest, Flaky{}, cfg, s.loader());
    EXPECT_TRUE(skipped.aborted_videos.empty());
    std::set<std::int64_t> frames;
    for (const auto& r : skipped.fused) frames.insert(r.frame);
    EXPECT_EQ(frames, (std::set<std::int64_t>{0, 1, 3, 4}));
}

TEST(Render, ZeroDetectionsLeavesPixelsAlone) {
    cv::Mat img(60, 80, CV_8UC3, cv::Scalar(10, 20, 30));
    cv::Mat copy = img.clone();
    draw_annotations(img, {}, {});
    EXPECT_EQ(cv::norm(img, copy, cv::NORM_INF), 0);
}

TEST(Render, OneDetectionDrawsOneOutline) {
    cv::Mat img(100, 100, CV_8UC3, cv::Scalar(128, 128, 128));
    const cv::Mat before = img.clone();
    draw_annotations(img, {{BoundingBox(20, 30, 60, 70), Label::drone, 0.9, 0, Source::full()}}, {});
    cv::Mat diff;
    cv::absdiff(img, before, diff);
    cv::Mat grey;
    cv::cvtColor(diff, grey, cv::COLOR_BGR2GRAY);
    std::vector<cv::Point> changed;
    cv::findNonZero(grey, changed);
    ASSERT_FALSE(changed.empty());
    EXPECT_NE(grey.at<uchar>(30, 40), 0);   // top edge
    EXPECT_NE(grey.at<uchar>(69, 40), 0);   // bottom edge
    EXPECT_NE(grey.at<uchar>(50, 20), 0);   // left edge
    EXPECT_EQ(grey.at<uchar>(50, 40), 0);   // interior untouched
    EXPECT_EQ(grey.at<uchar>(90, 90), 0);   // far away untouched
}

TEST(Render, WritesFilesAndReportsOutOfFrameBoxes) {
    const fs::path root = fresh_dir("render");
    std::vector<FrameEntry> manifest;
    for (int t = 0; t < 3; ++t) {
        cv::Mat img(50, 70, CV_8UC3, cv::Scalar(50 + t, 60, 70));
        const fs::path p = root / ("f" + std::to_string(t) + ".png");
        cv::imwrite(p.string(), img);
        manifest.push_back({"v", t, p.string()});
    }
    std::vector<DetectionRecord> recs;
    recs.push_back(to_record("v", {BoundingBox(5, 5, 15, 15), Label::drone, 0.8, 1, Source::full()}));
    recs.push_back(to_record("v", {BoundingBox(60, 40, 90, 60), Label::drone, 0.8, 2, Source::full()}));

    const RenderReport a = render_annotations(manifest, recs, nullptr, (root / "a").string());
    const RenderReport b = render_annotations(manifest, recs, nullptr, (root / "b").string());
    EXPECT_EQ(a.written, 2u);
    EXPECT_EQ(a.errors.size(), 1u);
    EXPECT_EQ(file_bytes(root / "a" / "v" / "f0.png"), file_bytes(root / "f0.png"));
    EXPECT_NE(file_bytes(root / "a" / "v" / "f1.png"), file_bytes(root / "f1.png"));
    EXPECT_EQ(file_bytes(root / "a" / "v" / "f1.png"), file_bytes(root / "b" / "v" / "f1.png"));
}
