#include "dronetile/augment.hpp"
#include "dronetile/color.hpp"
#include "dronetile/evaluation.hpp"
#include "dronetile/geometry.hpp"
#include "dronetile/ingest.hpp"
#include "dronetile/pipeline.hpp"
#include "dronetile/synth.hpp"
#include "dronetile/temporal.hpp"
#include "dronetile/tiling.hpp"

#include "../oracles.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

using namespace dronetile;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (ok || !pass) {
            pass = pass && ok;
            return;
        }
        pass = false;
        detail = what;
    }
};

std::string fmt(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// --- 1 ---------------------------------------------------------------------------------------

Outcome tiling_exactness() {
    Outcome o;
    const TilePlan p = plan_tiles(1920, 1080, 0.55);
    const int expected[4][2] = {{0, 0}, {864, 0}, {0, 486}, {864, 486}};
    for (int i = 0; i < 4; ++i) {
        const Window& t = p.tile(i);
        o.require(t.width == 1056 && t.height == 594, "1920x1080 tile size is not 1056x594");
        o.require(t.origin_x == expected[i][0] && t.origin_y == expected[i][1],
                  "1920x1080 tile " + std::to_string(i) + " origin mismatch");
    }

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> dim(1, 4096);
    std::uniform_real_distribution<double> frac(0.5, 0.95);
    for (int trial = 0; trial < 1000 && o.pass; ++trial) {
        const int w = dim(rng), h = dim(rng);
        const double f = frac(rng);
        const TilePlan plan = plan_tiles(w, h, f);
        const std::string tag = std::to_string(w) + "x" + std::to_string(h) + " f=" + fmt(f, 6);
        // Corner tiles form a 2x2 product grid, so frame coverage is coverage of every pixel
        // column and every pixel row by the tiles' x and y extents.
        std::vector<char> col(std::size_t(w), 0), row(std::size_t(h), 0);
        for (int i = 0; i < 4; ++i) {
            const Window& t = plan.tile(i);
            o.require(t.origin_x >= 0 && t.origin_y >= 0 && t.origin_x + t.width <= w &&
                          t.origin_y + t.height <= h,
                      "tile outside frame for " + tag);
            o.require(t.width >= f * w - 1e-9 && t.height >= f * h - 1e-9,
                      "tile smaller than fraction for " + tag);
            for (int x = t.origin_x; x < t.origin_x + t.width; ++x) col[std::size_t(x)] = 1;
            for (int y = t.origin_y; y < t.origin_y + t.height; ++y) row[std::size_t(y)] = 1;
        }
        o.require(std::find(col.begin(), col.end(), 0) == col.end() &&
                      std::find(row.begin(), row.end(), 0) == row.end(),
                  "corner tiles leave a gap for " + tag);
        const Window& full = plan.full();
        o.require(full.origin_x == 0 && full.origin_y == 0 && full.width == w && full.height == h,
                  "full window is not the frame for " + tag);
    }
    if (o.pass) o.detail = "1056x594 at (0,0),(864,0),(0,486),(864,486); 1000 random plans cover the frame";
    return o;
}

// --- 2 ---------------------------------------------------------------------------------------

BoundingBox random_box(std::mt19937_64& rng, double extent, double max_size) {
    std::uniform_real_distribution<double> pos(0, extent), size(2.0, max_size);
    const double x = pos(rng), y = pos(rng);
    return {x, y, x + size(rng), y + size(rng)};
}

Outcome geometry_oracle() {
    Outcome o;
    std::mt19937_64 rng(2);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const BoundingBox a = random_box(rng, 40, 60);
        BoundingBox b = random_box(rng, 40, 60);
        if (i % 10 == 0) b = BoundingBox(a.x1() + 1, a.y1() + 1, a.x2() - 0.25, a.y2() - 0.25);
        const double est = oracle::stratified_monte_carlo_iou(a, b, 1000, rng);
        worst = std::max(worst, std::abs(est - iou(a, b)));
    }
    o.require(worst <= 2e-3, "IoU deviates from Monte-Carlo estimate by " + fmt(worst, 6));

    std::uniform_real_distribution<double> score(0, 1), thr(0, 1);
    std::uniform_int_distribution<int> count(0, 8);
    std::bernoulli_distribution bird(0.3), tie(0.2);
    for (int trial = 0; trial < 500 && o.pass; ++trial) {
        std::vector<Detection> in;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            const double s = (tie(rng) && !in.empty()) ? in.back().score : score(rng);
            in.push_back({random_box(rng, 30, 25), bird(rng) ? Label::bird : Label::drone, s, 0,
                          Source::full()});
        }
        std::vector<Detection> prioritised = in;
        std::stable_sort(prioritised.begin(), prioritised.end(),
                         [](const Detection& a, const Detection& b) { return a.score > b.score; });
        const double t = trial % 50 == 0 ? 1.0 : thr(rng);
        const auto fixed = oracle::nms_fixed_points(prioritised, t);
        o.require(fixed.size() == 1, "oracle found no unique NMS fixed point");
        if (!o.pass) break;
        std::vector<Detection> expected;
        for (int i : fixed[0]) expected.push_back(prioritised[std::size_t(i)]);
        o.require(nms(in, t) == expected, "NMS differs from the exhaustive oracle at trial " +
                                              std::to_string(trial));
    }
    if (o.pass)
        o.detail = "max |IoU - MC| = " + fmt(worst, 6) + " over 100 pairs; 500 NMS instances match";
    return o;
}

// --- 3 ---------------------------------------------------------------------------------------

Outcome ap_oracle() {
    Outcome o;
    o.require(average_precision(std::vector<ScoredFlag>{{0.9, true}}, 1) == 1.0, "AP=1.0 case");
    o.require(average_precision(std::vector<ScoredFlag>{{0.9, false}, {0.8, true}}, 1) == 0.5,
              "AP=0.5 case");
    o.require(average_precision(std::vector<ScoredFlag>{{0.9, true}, {0.8, true}}, 2) == 1.0,
              "two-GT AP=1.0 case");
    o.require(average_precision(std::vector<ScoredFlag>{{0.9, false}}, 1) == 0.0, "AP=0.0 case");

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> n_det(0, 12), n_gt(1, 5), coarse(0, 5);
    std::uniform_real_distribution<double> score(0, 1);
    std::bernoulli_distribution tp(0.5), use_coarse(0.5);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t gt = std::size_t(n_gt(rng));
        const int n = n_det(rng);
        const bool ties = use_coarse(rng);
        std::vector<ScoredFlag> flags;
        std::size_t tps = 0;
        for (int i = 0; i < n; ++i) {
            const bool is_tp = tps < gt && tp(rng);
            tps += is_tp;
            flags.push_back({ties ? coarse(rng) / 5.0 : score(rng), is_tp});
        }
        worst = std::max(worst, std::abs(average_precision(flags, gt) - oracle::brute_force_ap(flags, gt)));
    }
    o.require(worst <= 1e-9, "AP deviates from oracle by " + fmt(worst, 12));
    if (o.pass) o.detail = "hand cases exact; max deviation " + fmt(worst, 12) + " over 1000 instances";
    return o;
}

// --- 4 and 6 ---------------------------------------------------------------------------------

struct TemporalRun {
    Outcome recovery;
    Outcome confidence;
};

TemporalRun temporal_recovery() {
    TemporalRun run;
    Outcome& o = run.recovery;
    Outcome& c = run.confidence;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> start_x(300, 1400), vx(-3, 3), vy(-1, 1), size(30, 50);
    std::uniform_int_distribution<int> score_num(256, 1024);
    const TemporalConfig cfg;  // window 6
    const std::int64_t n_frames = 60;

    std::size_t deleted = 0, recovered = 0, interpolations = 0, score_checks = 0;
    for (int k : {3, 5, 8}) {
        for (int video = 0; video < 10; ++video) {
            struct Track {
                double x, y, vx, vy, w, h;
                BoundingBox at(std::int64_t t) const {
                    const double cx = x + vx * double(t), cy = y + vy * double(t);
                    return {cx, cy, cx + w, cy + h};
                }
            };
            std::vector<Track> tracks;
            for (int i = 0; i < 3; ++i)
                tracks.push_back({start_x(rng), 200.0 + 300.0 * i, vx(rng), vy(rng), size(rng), size(rng)});

            VideoDetections v;
            v.video_id = "k" + std::to_string(k) + "_" + std::to_string(video);
            v.frame_width = 1920;
            v.frame_height = 1080;
            std::map<std::pair<int, std::int64_t>, double> scores;
            for (std::int64_t t = 0; t < n_frames; ++t) {
                v.frames[t];
                for (int i = 0; i < 3; ++i) {
                    const double s = score_num(rng) / 1024.0;
                    scores[{i, t}] = s;
                    const bool drop = t % k == 0 && t > 0 && t < n_frames - 1;
                    if (drop) continue;
                    v.frames[t].push_back({tracks[std::size_t(i)].at(t), Label::drone, s, t, Source::full()});
                }
            }

            const VideoDetections once = interpolate_gaps(v, cfg);
            const VideoDetections twice = interpolate_gaps(once, cfg);
            o.require(twice.detection_count() == once.detection_count(),
                      "second interpolation pass added boxes in " + v.video_id);

            for (std::int64_t t = k; t < n_frames - 1; t += k) {
                for (int i = 0; i < 3; ++i) {
                    ++deleted;
                    const BoundingBox truth = tracks[std::size_t(i)].at(t);
                    for (const Detection& d : once.frames.at(t)) {
                        if (d.source != Source::interpolated()) continue;
                        const double err = std::max({std::abs(d.box.x1() - truth.x1()),
                                                     std::abs(d.box.y1() - truth.y1()),
                                                     std::abs(d.box.x2() - truth.x2()),
                                                     std::abs(d.box.y2() - truth.y2())});
                        if (err >= 1e-6) continue;
                        ++recovered;
                        const double expected = ((scores[{i, t - 1}] + scores[{i, t + 1}]) / 2) / 2;
                        ++score_checks;
                        c.require(d.score == expected,
                                  "interpolated score " + fmt(d.score, 12) + " != " + fmt(expected, 12));
                        break;
                    }
                }
            }
            for (const auto& [t, dets] : once.frames)
                for (const Detection& d : dets) interpolations += d.source == Source::interpolated();
        }
    }
    const double rate = deleted ? double(recovered) / double(deleted) : 0.0;
    o.require(rate >= 0.99, "recovered only " + fmt(100 * rate, 2) + "% of deleted boxes");
    c.require(score_checks > 0 && score_checks == interpolations,
              "checked " + std::to_string(score_checks) + " of " + std::to_string(interpolations) +
                  " interpolations");
    if (o.pass)
        o.detail = std::to_string(recovered) + "/" + std::to_string(deleted) +
                   " deleted boxes restored (k = 3, 5, 8); second pass adds none";
    if (c.pass)
        c.detail = std::to_string(score_checks) + " interpolated scores equal (mean of endpoints)/2";
    return run;
}

// --- 5 ---------------------------------------------------------------------------------------

Outcome ablation_direction() {
    Outcome o;
    const cv::Mat blank(2160, 3840, CV_8UC3, cv::Scalar::all(0));
    const FrameLoader loader = [&](const FrameEntry&) { return blank; };
    int wins = 0;
    double sum_multi = 0, sum_whole = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> px(200, 3640), py(200, 1960), vel(-4, 4);
        SceneSpec spec;
        spec.video_id = "scene" + std::to_string(seed);
        spec.width = 3840;
        spec.height = 2160;
        spec.n_frames = 10;
        for (int i = 0; i < 6; ++i) {
            TrackSpec t;
            t.start_x = px(rng);
            t.start_y = py(rng);
            t.vx = vel(rng);
            t.vy = vel(rng);
            t.width = t.height = 12;
            t.last_frame = spec.n_frames - 1;
            spec.tracks.push_back(t);
        }
        const std::map<std::string, GroundTruth> gt = {{spec.video_id, scene_truth(spec)}};
        std::vector<FrameEntry> manifest;
        for (std::int64_t t = 0; t < spec.n_frames; ++t) manifest.push_back({spec.video_id, t, ""});

        MockDetectorConfig mock;
        mock.resize_to = 640;
        mock.min_resized_area = 8;
        mock.miss_prob = 0.1;
        mock.jitter_px = 0.5;
        mock.score_range = {0.5, 1.0};
        mock.rng_seed = seed;
        const MockDetector detector(MockDetector::truth_from(gt), mock);

        PipelineConfig multi;
        PipelineConfig whole;
        whole.whole_only = true;
        const double ap_multi =
            evaluate(group_by_video(run_pipeline(manifest, detector, multi, loader).final), gt).average_ap50;
        const double ap_whole =
            evaluate(group_by_video(run_pipeline(manifest, detector, whole, loader).final), gt).average_ap50;
        sum_multi += ap_multi;
        sum_whole += ap_whole;
        wins += ap_multi > ap_whole;
    }
    o.require(wins == 20, "multi-scale won only " + std::to_string(wins) + "/20 scenes");
    o.detail = "multi-scale > whole-only on " + std::to_string(wins) + "/20 scenes (mean mAP50 " +
               fmt(sum_multi / 20) + " vs " + fmt(sum_whole / 20) + ")";
    return o;
}

// --- 7 ---------------------------------------------------------------------------------------

PatchAsset make_patch(int w, int h, int kind, const std::string& id) {
    PatchAsset p;
    p.id = id;
    p.label = kind == 2 ? Label::bird : Label::drone;
    p.pixels = cv::Mat(h, w, CV_8UC4, cv::Scalar::all(0));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = (x + 0.5) / w - 0.5, dy = (y + 0.5) / h - 0.5;
            const bool body = kind == 1 ? true : dx * dx + dy * dy <= 0.25;
            if (!body) continue;
            const uchar shade = uchar(kind == 0 ? 30 + x : kind == 1 ? 90 : 160 + y / 2);
            p.pixels.at<cv::Vec4b>(y, x) = cv::Vec4b(shade, uchar(shade / 2 + 40), uchar(shade), 255);
        }
    return p;
}

std::vector<uchar> png_bytes(const cv::Mat& m) {
    std::vector<uchar> buf;
    cv::imencode(".png", m, buf);
    return buf;
}

Outcome augmentation_constraints() {
    Outcome o;
    const Lab white = srgb_to_lab(255, 255, 255);
    o.require(std::abs(white.L - 100) <= 0.5, "white L = " + fmt(white.L));
    const double de_bw = delta_e(srgb_to_lab(0, 0, 0), white);
    o.require(std::abs(de_bw - 100) <= 0.5, "dE(black, white) = " + fmt(de_bw));

    const std::vector<PatchAsset> assets = {make_patch(40, 28, 0, "a"), make_patch(20, 20, 1, "b"),
                                            make_patch(36, 18, 2, "c")};
    AugmentConfig cfg;
    cfg.rng_seed = 77;
    cfg.max_instances = 4;

    int placed = 0, gate_checks = 0;
    for (int i = 0; i < 200 && o.pass; ++i) {
        std::mt19937_64 gen(std::uint64_t(i) * 7919 + 1);
        std::uniform_int_distribution<int> W(240, 640), H(180, 480), tone(40, 200);
        const int w = W(gen), h = H(gen);
        cv::Mat image(h, w, CV_8UC3);
        const cv::Scalar base(tone(gen), tone(gen), tone(gen));
        for (int y = 0; y < h; ++y)
            image.row(y).setTo(base + cv::Scalar::all(60.0 * y / h));
        cv::Mat noise(h, w, CV_8UC3);
        cv::randu(noise, 0, 25);
        image += noise;

        std::vector<LabeledBox> existing;
        std::uniform_real_distribution<double> ex(0, 0.8), es(0.05, 0.2);
        for (int e = 0; e < i % 4; ++e) {
            const double x = ex(gen) * w, y = ex(gen) * h;
            existing.push_back({Label::drone, BoundingBox(x, y, std::min<double>(w, x + es(gen) * w),
                                                          std::min<double>(h, y + es(gen) * h))});
        }

        const std::string name = "img" + std::to_string(i) + ".png";
        std::mt19937_64 rng_a(image_seed(cfg.rng_seed, name)), rng_b(image_seed(cfg.rng_seed, name));
        const PlacementResult a = place_instances(image, existing, assets, cfg, rng_a);
        const PlacementResult b = place_instances(image, existing, assets, cfg, rng_b);
        o.require(png_bytes(a.image) == png_bytes(b.image), "rerun differs for " + name);
        o.require(a.added.size() == b.added.size(), "rerun placement count differs for " + name);

        std::vector<BoundingBox> occupied;
        for (const LabeledBox& e : existing) occupied.push_back(e.box);
        for (const Placement& p : a.added) {
            const BoundingBox& box = p.added.box;
            o.require(box.x1() >= 0 && box.y1() >= 0 && box.x2() <= w && box.y2() <= h,
                      "added box out of bounds in " + name);
            for (const BoundingBox& other : occupied)
                o.require(intersection_area(box, other) == 0.0, "added box overlaps in " + name);
            occupied.push_back(box);

            // The region never overlaps an earlier paste, so its pixels are the original ones.
            double L = 0, A = 0, B = 0;
            const cv::Rect r(int(box.x1()), int(box.y1()), int(box.width()), int(box.height()));
            for (int y = r.y; y < r.y + r.height; ++y)
                for (int x = r.x; x < r.x + r.width; ++x) {
                    const cv::Vec3b px = image.at<cv::Vec3b>(y, x);
                    const Lab c = srgb_to_lab(px[2], px[1], px[0]);
                    L += c.L;
                    A += c.a;
                    B += c.b;
                }
            const double n = double(r.area());
            const Lab region{L / n, A / n, B / n};
            o.require(std::abs(region.L - p.region_mean.L) < 1e-9 &&
                          std::abs(region.a - p.region_mean.a) < 1e-9 &&
                          std::abs(region.b - p.region_mean.b) < 1e-9,
                      "reported region colour is wrong in " + name);
            o.require(delta_e(p.patch_mean, region) <= cfg.delta_e_max, "dE gate violated in " + name);
            ++gate_checks;
        }
        placed += int(a.added.size());
    }
    o.require(placed >= 200, "only " + std::to_string(placed) + " placements over 200 images");
    if (o.pass)
        o.detail = std::to_string(placed) + " placements on 200 images, " + std::to_string(gate_checks) +
                   " dE checks; reruns identical; white L=" + fmt(white.L, 3) + ", dE(black,white)=" +
                   fmt(de_bw, 3);
    return o;
}

// --- 8 ---------------------------------------------------------------------------------------

Outcome format_round_trips() {
    Outcome o;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> coord(0, 4000), size(0, 400), unit(0, 1);
    std::uniform_int_distribution<int> score(0, 1'000'000), frame(0, 1'000'000), source(0, 5),
        video(0, 30);
    constexpr int n = 10000;

    std::vector<DetectionRecord> recs;
    for (int i = 0; i < n; ++i) {
        DetectionRecord r;
        r.video = "video-" + std::to_string(video(rng));
        r.frame = frame(rng);
        r.label = unit(rng) < 0.3 ? Label::bird : Label::drone;
        r.x = coord(rng);
        r.y = coord(rng);
        r.w = i % 10 == 0 ? std::floor(size(rng)) : size(rng);
        r.h = size(rng);
        r.score = score(rng) / 1e6;
        const int s = source(rng);
        r.source = s == 0 ? Source::full() : s == 5 ? Source::interpolated() : Source::tile_at(s - 1);
        recs.push_back(r);
    }
    const std::string jsonl = serialize_detections(recs);
    const auto parsed = parse_detections(jsonl);
    o.require(parsed == recs, "JSONL parse does not reproduce the records");
    o.require(serialize_detections(parsed) == jsonl, "JSONL re-serialisation differs");

    GroundTruth gt;
    gt.video_id = "g";
    for (int i = 0; i < n; ++i) {
        const double x = coord(rng), y = coord(rng);
        gt.entries[frame(rng) % 2000].push_back(BoundingBox(x, y, x + size(rng), y + size(rng)));
    }
    const GroundTruth gt1 = parse_gt_file(serialize_gt(gt), "g");
    const std::string gt_text = serialize_gt(gt1);
    const GroundTruth gt2 = parse_gt_file(gt_text, "g");
    o.require(gt1.box_count() == std::size_t(n), "GT lost boxes");
    o.require(gt1.entries == gt2.entries && serialize_gt(gt2) == gt_text, "GT round trip unstable");

    std::vector<LabeledBox> labels;
    const int W = 1920, H = 1080;
    for (int i = 0; i < n; ++i) {
        const double cx = unit(rng), cy = unit(rng);
        const double hw = std::min(cx, 1 - cx) * unit(rng), hh = std::min(cy, 1 - cy) * unit(rng);
        labels.push_back({unit(rng) < 0.5 ? Label::drone : Label::bird,
                          BoundingBox((cx - hw) * W, (cy - hh) * H, (cx + hw) * W, (cy + hh) * H)});
    }
    const auto l1 = parse_normalized_label(serialize_normalized_label(labels, W, H), W, H);
    const std::string label_text = serialize_normalized_label(l1, W, H);
    const auto l2 = parse_normalized_label(label_text, W, H);
    o.require(l1.size() == std::size_t(n), "labels lost boxes");
    o.require(l1 == l2 && serialize_normalized_label(l2, W, H) == label_text,
              "normalised label round trip unstable");
    if (o.pass) o.detail = "10000 records each: JSONL, GT and normalised labels bit-stable";
    return o;
}

// --- 9 ---------------------------------------------------------------------------------------

int run_cli(const fs::path& dir, const std::string& args) {
    const std::string cmd = "cd '" + dir.string() + "' && '" DRONETILE_CLI "' " + args +
                            " > cli_stdout.txt 2> cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome pipeline_determinism() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "dronetile_acceptance_9";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "scene.txt")
        << "video = det100\nwidth = 640\nheight = 480\nframes = 100\nbackground = noise\nseed = 9\n"
           "[track]\nlabel = drone\nstart = 100,100\nvelocity = 3,1\nsize = 18,14\nfirst = 0\nlast = 99\n"
           "[track]\nlabel = drone\nstart = 560,380\nvelocity = -2,-1.5\nsize = 24,24\nfirst = 5\nlast = 90\n"
           "[track]\nlabel = bird\nstart = 300,60\nvelocity = 1,0.5\nsize = 16,8\nfirst = 0\nlast = 99\n";
    o.require(run_cli(dir, "synth --spec scene.txt --out scene") == 0, "synth failed");
    const std::string common = "run --manifest scene/manifest.txt --gt scene/gt --miss-prob 0.2 "
                               "--fp-rate 0.5 --jitter 1 --score-min 0.3 --score-max 1 --seed 5 ";
    o.require(run_cli(dir, common + "--jobs 1 --out jobs1.jsonl") == 0, "run --jobs 1 failed");
    o.require(run_cli(dir, common + "--jobs 8 --out jobs8.jsonl") == 0, "run --jobs 8 failed");
    if (!o.pass) return o;
    const std::string one = slurp(dir / "jobs1.jsonl"), eight = slurp(dir / "jobs8.jsonl");
    o.require(!one.empty(), "run produced no detections");
    o.require(one == eight, "--jobs 1 and --jobs 8 outputs differ");
    if (o.pass)
        o.detail = "identical " + std::to_string(std::count(one.begin(), one.end(), '\n')) +
                   "-line detections files on a 100-frame video";
    return o;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
    };
    int failures = 0;
    auto report = [&](const Criterion& c, const Outcome& o, double seconds) {
        const bool in_time = seconds < c.limit_s;
        const bool ok = o.pass && in_time;
        failures += !ok;
        std::printf("criterion %d %s: %s (%.2f s, limit %.0f s)%s%s\n", c.id, c.name, ok ? "PASS" : "FAIL",
                    seconds, c.limit_s, o.detail.empty() ? "" : " - ", o.detail.c_str());
        if (!in_time) std::printf("  runtime limit exceeded\n");
        std::fflush(stdout);
    };
    auto timed = [&](const Criterion& c, const std::function<Outcome()>& fn) {
        const auto start = clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        report(c, o, std::chrono::duration<double>(clock::now() - start).count());
    };

    timed({1, "tiling exactness", 1}, tiling_exactness);
    timed({2, "geometry oracle", 30}, geometry_oracle);
    timed({3, "AP oracle equivalence", 10}, ap_oracle);
    const auto temporal_start = clock::now();
    TemporalRun temporal;
    try {
        temporal = temporal_recovery();
    } catch (const std::exception& e) {
        temporal.recovery = temporal.confidence = Outcome{false, std::string("exception: ") + e.what()};
    }
    const double temporal_s = std::chrono::duration<double>(clock::now() - temporal_start).count();
    report({4, "temporal exact recovery", 10}, temporal.recovery, temporal_s);
    timed({5, "ablation direction", 120}, ablation_direction);
    report({6, "interpolated confidence", 10}, temporal.confidence, temporal_s);
    timed({7, "augmentation constraints", 60}, augmentation_constraints);
    timed({8, "format round trips", 10}, format_round_trips);
    timed({9, "pipeline determinism", 60}, pipeline_determinism);
    return failures == 0 ? 0 : 1;
}
