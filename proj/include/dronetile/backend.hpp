#pragma once

#include "dronetile/geometry.hpp"
#include "dronetile/ingest.hpp"
#include "dronetile/range.hpp"
#include "dronetile/tiling.hpp"

#include <opencv2/core.hpp>

#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dronetile {

/// What a detector sees of one frame. `pixels` is null for detectors that only need the size.
struct FrameContext {
    std::string video;
    std::int64_t frame = 0;
    int width = 0;
    int height = 0;
    const cv::Mat* pixels = nullptr;
};

/// Pluggable detector. Implementations must tolerate concurrent `detect` calls.
class Detector {
public:
    virtual ~Detector() = default;

    virtual bool needs_pixels() const = 0;

    /// Detections in window-local coordinates, tagged with the window's source.
    virtual std::vector<Detection> detect(const FrameContext& frame, const Window& window) const = 0;
};

// --- subprocess protocol ------------------------------------------------------------------

/// Parses child output: one `label score x y w h` line per detection. Blank lines are
/// ignored. Throws BackendError carrying `text` on any malformed line.
std::vector<Detection> parse_backend_output(std::string_view text, const Source& source,
                                            std::int64_t frame);

/// Runs `<executable> <image_path>`, requiring exit status 0 within `timeout`. The child's
/// stderr is forwarded to ours.
std::vector<Detection> detect_via_subprocess(
    const std::string& executable, const std::string& image_path, const Source& source,
    std::int64_t frame, std::chrono::milliseconds timeout = std::chrono::seconds(60));

/// Crops each window to a temporary PNG and hands it to an external executable.
class SubprocessDetector final : public Detector {
public:
    SubprocessDetector(std::string executable, std::chrono::milliseconds timeout,
                       std::string temp_dir = {});

    bool needs_pixels() const override { return true; }
    std::vector<Detection> detect(const FrameContext& frame, const Window& window) const override;

private:
    std::string executable_;
    std::chrono::milliseconds timeout_;
    std::string temp_dir_;
};

// --- mock ---------------------------------------------------------------------------------

struct MockDetectorConfig {
    double miss_prob = 0.0;
    double fp_rate = 0.0;      // expected false positives per window
    double jitter_px = 0.0;    // per-edge uniform noise half-width
    Range score_range{0.9, 0.9};
    std::uint64_t rng_seed = 0;

    // False-positive box sizes, pixels.
    double fp_min_size = 6.0;
    double fp_max_size = 40.0;

    // Resolution model: when `resize_to` > 0 the window is scaled so its longer side equals
    // `resize_to`, and detections covering fewer than `min_resized_area` pixels after that
    // scaling are dropped.
    double resize_to = 0.0;
    double min_resized_area = 0.0;

    void validate() const;
};

/// 0 for the full frame, 1 + i for tile i.
int window_index(const Source& source) noexcept;

/// Sub-seed for one (frame, window) pair.
std::uint64_t derive_seed(std::uint64_t seed, std::int64_t frame, int window) noexcept;

/// Simulated detector output for one window. `truth` is in frame coordinates. Fully
/// determined by (cfg.rng_seed, frame, window).
std::vector<Detection> mock_detect(std::span<const LabeledBox> truth, const Window& window,
                                   std::int64_t frame, const MockDetectorConfig& cfg);

/// Mock backend answering from per-video ground truth. The video id is mixed into the seed.
class MockDetector final : public Detector {
public:
    using Truth = std::map<std::string, std::map<std::int64_t, std::vector<LabeledBox>>>;

    MockDetector(Truth truth, MockDetectorConfig cfg);

    /// Drone-only truth from ground-truth files.
    static Truth truth_from(const std::map<std::string, GroundTruth>& gt);

    bool needs_pixels() const override { return false; }
    std::vector<Detection> detect(const FrameContext& frame, const Window& window) const override;

private:
    Truth truth_;
    MockDetectorConfig cfg_;
};

}  // namespace dronetile
