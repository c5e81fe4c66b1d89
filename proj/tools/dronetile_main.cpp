// dronetile: command-line front end for the tiled small-drone detection toolkit.

#include "config_file.hpp"

#include "dronetile/augment.hpp"
#include "dronetile/backend.hpp"
#include "dronetile/error.hpp"
#include "dronetile/evaluation.hpp"
#include "dronetile/fusion.hpp"
#include "dronetile/ingest.hpp"
#include "dronetile/pipeline.hpp"
#include "dronetile/synth.hpp"
#include "dronetile/temporal.hpp"
#include "dronetile/tiling.hpp"

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace dronetile;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read `" + path + "`");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write `" + path + "`");
    out << text;
}

std::vector<FrameEntry> load_manifest(const std::string& path) {
    return parse_manifest(slurp(path), fs::path(path).parent_path().string());
}

std::pair<int, int> parse_frame_size(const std::string& s) {
    const auto x = s.find_first_of("xX");
    if (x == std::string::npos) throw UsageError("frame size must look like WxH");
    try {
        std::size_t used_w = 0, used_h = 0;
        const int w = std::stoi(s.substr(0, x), &used_w);
        const int h = std::stoi(s.substr(x + 1), &used_h);
        if (used_w != x || used_h != s.size() - x - 1 || w < 2 || h < 2) throw std::exception();
        return {w, h};
    } catch (const std::exception&) {
        throw UsageError("frame size must look like WxH, got `" + s + "`");
    }
}

Range parse_range(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError("range must look like MIN:MAX");
    try {
        return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("range must look like MIN:MAX, got `" + s + "`");
    }
}

// Options shared by several subcommands, resolved against the config file after parsing.
struct Globals {
    std::string config_path;
    std::optional<long long> seed;
    std::optional<long long> jobs;
    cli::ConfigFile config;
};

struct FusionOpts {
    std::optional<double> nms_iou, score;
    bool keep_birds = false;
    bool class_agnostic = false;

    void add(CLI::App* app) {
        app->add_option("--nms-iou", nms_iou, "IoU threshold for NMS (default 0.1)");
        app->add_option("--score", score, "confidence threshold (default 0.375)");
        app->add_flag("--keep-birds", keep_birds, "report bird detections too");
        app->add_flag("--class-agnostic", class_agnostic, "let any label suppress any other");
    }
    FusionConfig resolve(const cli::ConfigFile& c) const {
        FusionConfig f;
        f.nms_iou = c.number(nms_iou, "nms_iou", f.nms_iou);
        f.score_threshold = c.number(score, "score_threshold", f.score_threshold);
        if (c.flag(keep_birds, "keep_birds")) f.report_labels.insert(Label::bird);
        f.class_aware = !c.flag(class_agnostic, "class_agnostic");
        f.validate();
        return f;
    }
};

struct TemporalOpts {
    std::optional<double> window, match_iou, margin, veto_iou, divisor;

    void add(CLI::App* app) {
        app->add_option("--window", window, "timeline positions searched each side (default 6)");
        app->add_option("--match-iou", match_iou, "minimum IoU of an endpoint pair (default 0.1)");
        app->add_option("--margin", margin, "border margin, fraction of max(W,H) (default 0.02)");
        app->add_option("--veto-iou", veto_iou, "reject above this overlap (default 0.3)");
        app->add_option("--divisor", divisor, "confidence divisor (default 2)");
    }
    TemporalConfig resolve(const cli::ConfigFile& c) const {
        TemporalConfig t;
        t.window = static_cast<int>(c.number(window, "window", t.window));
        t.match_iou = c.number(match_iou, "match_iou", t.match_iou);
        t.border_margin = c.number(margin, "border_margin", t.border_margin);
        t.veto_iou = c.number(veto_iou, "veto_iou", t.veto_iou);
        t.confidence_divisor = c.number(divisor, "confidence_divisor", t.confidence_divisor);
        t.validate();
        return t;
    }
};

struct BackendOpts {
    std::string backend = "mock";
    std::string exec;
    std::string gt_dir;
    std::optional<double> miss_prob, fp_rate, jitter, score_min, score_max, timeout_ms;
    std::optional<double> resize_to, min_resized_area;

    void add(CLI::App* app) {
        app->add_option("--backend", backend, "mock or exec")
            ->check(CLI::IsMember({"mock", "exec"}));
        app->add_option("--exec", exec, "detector executable for the exec backend");
        app->add_option("--gt", gt_dir, "ground-truth directory (mock truth, evaluation)");
        app->add_option("--miss-prob", miss_prob, "mock: probability of missing a target");
        app->add_option("--fp-rate", fp_rate, "mock: expected false positives per window");
        app->add_option("--jitter", jitter, "mock: per-edge coordinate noise, pixels");
        app->add_option("--score-min", score_min, "mock: lowest score");
        app->add_option("--score-max", score_max, "mock: highest score");
        app->add_option("--resize-to", resize_to, "mock: simulated detector input size");
        app->add_option("--min-area", min_resized_area, "mock: smallest resolvable area after resize");
        app->add_option("--timeout-ms", timeout_ms, "exec: per-call timeout (default 60000)");
    }

    std::unique_ptr<Detector> make(const Globals& g) const {
        const auto& c = g.config;
        if (backend == "exec") {
            if (exec.empty()) throw UsageError("--backend exec needs --exec <path>");
            const auto ms = static_cast<long long>(c.number(timeout_ms, "timeout_ms", 60000));
            return std::make_unique<SubprocessDetector>(exec, std::chrono::milliseconds(ms));
        }
        if (gt_dir.empty()) throw UsageError("the mock backend needs --gt <dir>");
        MockDetectorConfig m;
        m.miss_prob = c.number(miss_prob, "miss_prob", 0.0);
        m.fp_rate = c.number(fp_rate, "fp_rate", 0.0);
        m.jitter_px = c.number(jitter, "jitter_px", 0.0);
        m.score_range = {c.number(score_min, "score_min", 0.9), c.number(score_max, "score_max", 0.9)};
        m.resize_to = c.number(resize_to, "resize_to", 0.0);
        m.min_resized_area = c.number(min_resized_area, "min_resized_area", 0.0);
        m.rng_seed = static_cast<std::uint64_t>(c.integer(g.seed, "seed", 0));
        m.validate();
        return std::make_unique<MockDetector>(MockDetector::truth_from(load_gt_dir(gt_dir)), m);
    }
};

ApInterpolation parse_interp(const std::string& s) {
    return s == "11point" ? ApInterpolation::eleven_point : ApInterpolation::all_points;
}

void print_and_maybe_csv(const EvalReport& report, const std::string& csv) {
    std::cout << format_report_table(report);
    if (!csv.empty()) spit(csv, format_report_csv(report));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tiled multi-scale small-drone detection toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "flat key=value settings file");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--jobs", g.jobs, "worker threads");

    // plan-tiles
    auto* plan_cmd = app.add_subcommand("plan-tiles", "print the crop windows for a frame size");
    int plan_w = 0, plan_h = 0;
    std::optional<double> plan_fraction;
    plan_cmd->add_option("--width", plan_w)->required();
    plan_cmd->add_option("--height", plan_h)->required();
    plan_cmd->add_option("--fraction", plan_fraction, "tile side as a fraction of the frame (default 0.55)");

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "run a backend on every window of a manifest");
    std::string detect_manifest_path, detect_out;
    BackendOpts detect_backend;
    bool detect_whole_only = false, detect_skip = false;
    std::optional<double> detect_fraction;
    detect_cmd->add_option("--manifest", detect_manifest_path)->required();
    detect_cmd->add_option("--out", detect_out)->required();
    detect_cmd->add_option("--fraction", detect_fraction);
    detect_cmd->add_flag("--whole-only", detect_whole_only, "full frame only, no tiles");
    detect_cmd->add_flag("--skip-failed-frames", detect_skip);
    detect_backend.add(detect_cmd);

    // fuse
    auto* fuse_cmd = app.add_subcommand("fuse", "merge window detections per frame");
    std::string fuse_plan, fuse_in, fuse_out;
    bool fuse_lenient = false;
    FusionOpts fuse_opts;
    fuse_cmd->add_option("--plan", fuse_plan, "plan file as printed by plan-tiles")->required();
    fuse_cmd->add_option("--detections", fuse_in)->required();
    fuse_cmd->add_option("--out", fuse_out)->required();
    fuse_cmd->add_flag("--lenient", fuse_lenient, "tolerate unknown JSON fields");
    fuse_opts.add(fuse_cmd);

    // interpolate
    auto* interp_cmd = app.add_subcommand("interpolate", "fill detection gaps over time");
    std::string interp_in, interp_out, interp_size, interp_manifest;
    int interp_stride = 1;
    bool interp_lenient = false;
    TemporalOpts interp_opts;
    interp_cmd->add_option("--detections", interp_in)->required();
    interp_cmd->add_option("--frame-size", interp_size, "WxH")->required();
    interp_cmd->add_option("--out", interp_out)->required();
    interp_cmd->add_option("--manifest", interp_manifest, "timeline of processed frames");
    interp_cmd->add_option("--stride", interp_stride, "frame step when no manifest is given");
    interp_cmd->add_flag("--lenient", interp_lenient);
    interp_opts.add(interp_cmd);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "AP50 per video and its average");
    std::string eval_in, eval_gt, eval_csv, eval_interp = "allpoints";
    double eval_iou = 0.5;
    bool eval_lenient = false;
    eval_cmd->add_option("--detections", eval_in)->required();
    eval_cmd->add_option("--gt", eval_gt)->required();
    eval_cmd->add_option("--iou", eval_iou);
    eval_cmd->add_option("--interp", eval_interp)->check(CLI::IsMember({"allpoints", "11point"}));
    eval_cmd->add_option("--csv", eval_csv);
    eval_cmd->add_flag("--lenient", eval_lenient);

    // augment
    auto* aug_cmd = app.add_subcommand("augment", "copy-paste augmentation of a labelled image set");
    AugmentDatasetOptions aug;
    std::optional<long long> aug_max;
    std::optional<double> aug_de;
    std::string aug_scale;
    aug_cmd->add_option("--images", aug.images_dir)->required();
    aug_cmd->add_option("--labels", aug.labels_dir)->required();
    aug_cmd->add_option("--patches", aug.patches_dir)->required();
    aug_cmd->add_option("--out", aug.out_dir)->required();
    aug_cmd->add_option("--max-instances", aug_max);
    aug_cmd->add_option("--scale", aug_scale, "MIN:MAX pasted width over image width");
    aug_cmd->add_option("--delta-e-max", aug_de);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "render a synthetic scene with ground truth");
    std::string synth_spec, synth_out;
    synth_cmd->add_option("--spec", synth_spec)->required();
    synth_cmd->add_option("--out", synth_out)->required();

    // render
    auto* render_cmd = app.add_subcommand("render", "draw detections onto frames");
    std::string render_manifest, render_in, render_gt, render_out;
    render_cmd->add_option("--manifest", render_manifest)->required();
    render_cmd->add_option("--detections", render_in)->required();
    render_cmd->add_option("--gt", render_gt);
    render_cmd->add_option("--out", render_out)->required();

    // subsample
    auto* sub_cmd = app.add_subcommand("subsample", "keep every N-th frame of a manifest");
    std::size_t sub_stride = 5;
    std::string sub_manifest, sub_out;
    sub_cmd->add_option("--stride", sub_stride)->required();
    sub_cmd->add_option("--manifest", sub_manifest)->required();
    sub_cmd->add_option("--out", sub_out, "defaults to standard output");

    // run
    auto* run_cmd = app.add_subcommand("run", "plan, detect, fuse, interpolate and evaluate");
    std::string run_manifest, run_out, run_raw, run_fused, run_csv, run_interp = "allpoints";
    bool run_whole_only = false, run_no_interp = false, run_skip = false;
    std::optional<double> run_fraction;
    BackendOpts run_backend;
    FusionOpts run_fusion;
    TemporalOpts run_temporal;
    run_cmd->add_option("--manifest", run_manifest)->required();
    run_cmd->add_option("--out", run_out)->required();
    run_cmd->add_option("--raw-out", run_raw, "also write backend output");
    run_cmd->add_option("--fused-out", run_fused, "also write fused detections");
    run_cmd->add_option("--csv", run_csv, "evaluation CSV (needs --gt)");
    run_cmd->add_option("--interp", run_interp)->check(CLI::IsMember({"allpoints", "11point"}));
    run_cmd->add_option("--fraction", run_fraction);
    run_cmd->add_flag("--whole-only", run_whole_only, "full frame only, no tiles");
    run_cmd->add_flag("--no-interpolate", run_no_interp);
    run_cmd->add_flag("--skip-failed-frames", run_skip);
    run_backend.add(run_cmd);
    run_fusion.add(run_cmd);
    run_temporal.add(run_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (!g.config_path.empty()) g.config = cli::ConfigFile::load(g.config_path);
        const auto& cfg = g.config;
        const int jobs = static_cast<int>(cfg.integer(g.jobs, "jobs", 1));
        if (jobs < 1) throw UsageError("--jobs must be positive");

        if (*plan_cmd) {
            const TilePlan plan =
                plan_tiles(plan_w, plan_h, cfg.number(plan_fraction, "fraction", kDefaultTileFraction));
            std::cout << format_plan(plan);
        } else if (*detect_cmd) {
            PipelineConfig pc;
            pc.tile_fraction = cfg.number(detect_fraction, "fraction", kDefaultTileFraction);
            pc.whole_only = cfg.flag(detect_whole_only, "whole_only");
            pc.skip_failed_frames = cfg.flag(detect_skip, "skip_failed_frames");
            pc.jobs = jobs;
            auto detector = detect_backend.make(g);
            PipelineResult r = detect_manifest(load_manifest(detect_manifest_path), *detector, pc);
            write_detections(detect_out, r.raw);
            for (const auto& f : r.failures)
                std::cerr << "backend failure: " << f.video << " frame " << f.frame << ": "
                          << f.message << '\n';
            if (!r.failures.empty()) return kBackend;
        } else if (*fuse_cmd) {
            const TilePlan plan = parse_plan(slurp(fuse_plan));
            const auto fused =
                fuse_records(read_detections(fuse_in, fuse_lenient), plan, fuse_opts.resolve(cfg));
            write_detections(fuse_out, fused);
        } else if (*interp_cmd) {
            const auto [w, h] = parse_frame_size(interp_size);
            std::map<std::string, std::vector<std::int64_t>> timelines;
            if (!interp_manifest.empty()) timelines = manifest_timelines(load_manifest(interp_manifest));
            const auto out = interpolate_records(read_detections(interp_in, interp_lenient), w, h,
                                                 interp_opts.resolve(cfg), timelines, interp_stride);
            write_detections(interp_out, out);
        } else if (*eval_cmd) {
            const auto report = evaluate(group_by_video(read_detections(eval_in, eval_lenient)),
                                         load_gt_dir(eval_gt), eval_iou, parse_interp(eval_interp));
            print_and_maybe_csv(report, eval_csv);
        } else if (*aug_cmd) {
            AugmentConfig& a = aug.cfg;
            a.rng_seed = static_cast<std::uint64_t>(cfg.integer(g.seed, "seed", 0));
            a.max_instances = static_cast<int>(cfg.integer(aug_max, "max_instances", a.max_instances));
            a.delta_e_max = cfg.number(aug_de, "delta_e_max", a.delta_e_max);
            if (!aug_scale.empty()) {
                a.scale = parse_range(aug_scale);
            } else {
                a.scale.min = cfg.number(std::nullopt, "scale_min", a.scale.min);
                a.scale.max = cfg.number(std::nullopt, "scale_max", a.scale.max);
            }
            const AugmentReport report = augment_dataset(aug);
            std::cout << report.to_json();
            if (!report.errors.empty()) return kData;
        } else if (*synth_cmd) {
            const SceneSpec spec = parse_scene_spec(slurp(synth_spec));
            const Scene scene = generate_scene(spec);
            const fs::path out(synth_out);
            fs::create_directories(out / "frames");
            fs::create_directories(out / "gt");
            std::vector<FrameEntry> manifest;
            for (std::size_t t = 0; t < scene.frames.size(); ++t) {
                char name[32];
                std::snprintf(name, sizeof name, "frame_%06zu.png", t);
                const fs::path rel = fs::path("frames") / name;
                if (!cv::imwrite((out / rel).string(), scene.frames[t]))
                    throw std::runtime_error("cannot write " + (out / rel).string());
                manifest.push_back({spec.video_id, static_cast<std::int64_t>(t), rel.string()});
            }
            spit((out / "gt" / (spec.video_id + ".txt")).string(), serialize_gt(scene.truth));
            spit((out / "manifest.txt").string(), serialize_manifest(manifest));
        } else if (*render_cmd) {
            std::map<std::string, GroundTruth> gt;
            if (!render_gt.empty()) gt = load_gt_dir(render_gt);
            const RenderReport r = render_annotations(load_manifest(render_manifest),
                                                      read_detections(render_in), render_gt.empty() ? nullptr : &gt,
                                                      render_out);
            for (const auto& e : r.errors) std::cerr << e << '\n';
            if (!r.errors.empty()) return kData;
        } else if (*sub_cmd) {
            const std::string text = serialize_manifest(subsample_manifest(load_manifest(sub_manifest), sub_stride));
            if (sub_out.empty())
                std::cout << text;
            else
                spit(sub_out, text);
        } else if (*run_cmd) {
            PipelineConfig pc;
            pc.tile_fraction = cfg.number(run_fraction, "fraction", kDefaultTileFraction);
            pc.whole_only = cfg.flag(run_whole_only, "whole_only");
            pc.interpolate = !cfg.flag(run_no_interp, "no_interpolate");
            pc.skip_failed_frames = cfg.flag(run_skip, "skip_failed_frames");
            pc.fusion = run_fusion.resolve(cfg);
            pc.temporal = run_temporal.resolve(cfg);
            pc.jobs = jobs;
            auto detector = run_backend.make(g);
            const auto manifest = load_manifest(run_manifest);
            const PipelineResult r = run_pipeline(manifest, *detector, pc);
            write_detections(run_out, r.final);
            if (!run_raw.empty()) write_detections(run_raw, r.raw);
            if (!run_fused.empty()) write_detections(run_fused, r.fused);
            for (const auto& f : r.failures)
                std::cerr << "backend failure: " << f.video << " frame " << f.frame << ": "
                          << f.message << '\n';
            if (!run_backend.gt_dir.empty()) {
                auto gt = load_gt_dir(run_backend.gt_dir);
                print_and_maybe_csv(evaluate(group_by_video(r.final), gt, 0.5, parse_interp(run_interp)),
                                    run_csv);
            }
            std::cerr << "frames " << manifest.size() << ", raw " << r.raw.size()
                      << ", fused " << r.fused.size() << ", final " << r.final.size() << '\n';
            if (!r.failures.empty()) return kBackend;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        if (!e.output().empty()) std::cerr << "--- backend output ---\n" << e.output() << '\n';
        return kBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
