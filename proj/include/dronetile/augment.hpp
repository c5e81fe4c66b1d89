#pragma once

#include "dronetile/color.hpp"
#include "dronetile/geometry.hpp"
#include "dronetile/ingest.hpp"
#include "dronetile/range.hpp"

#include <opencv2/core.hpp>

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dronetile {

/// Object cutout on a transparent background. `pixels` is CV_8UC4 (BGRA) and cropped to
/// its opaque support; an empty raster marks a patch that lost every opaque pixel.
struct PatchAsset {
    cv::Mat pixels;
    Label label = Label::drone;
    std::string id;

    /// Has at least one pixel with alpha > 0 and its opaque support touches all four edges.
    bool valid() const;
};

/// Crops a BGRA raster to the bounding rectangle of its alpha > 0 pixels. Returns an
/// empty Mat when no pixel is opaque.
cv::Mat tighten_to_alpha(const cv::Mat& bgra);

struct PatchTransformConfig {
    bool blur = true;
    Range blur_sigma{0.0, 1.0};
    bool dropout = true;
    Range dropout_prob{0.0, 0.03};
    bool noise = true;
    Range noise_sigma{0.0, 6.0};
    bool photometric = true;
    Range brightness{-20.0, 20.0};  // additive offset, 8-bit units
    Range contrast{0.8, 1.2};       // multiplier around mid-grey
    Range gamma{0.8, 1.25};

    static PatchTransformConfig disabled();
};

struct AugmentConfig {
    Range scale{0.02, 0.15};  // pasted width as a fraction of image width
    int max_instances = 3;
    double delta_e_max = 60.0;
    int max_placement_attempts = 50;
    std::uint64_t rng_seed = 0;
    PatchTransformConfig transforms;

    void validate() const;
};

/// Applies the enabled transforms (photometric, blur, noise, dropout, in that order) with
/// parameters drawn from `rng`, then re-crops to the opaque support.
PatchAsset transform_patch(const PatchAsset& patch, const AugmentConfig& cfg, std::mt19937_64& rng);

struct Placement {
    LabeledBox added;
    std::string asset_id;
    Lab patch_mean;
    Lab region_mean;
    double delta_e = 0.0;
};

struct PlacementStats {
    int placed = 0;
    int skipped = 0;
    int overlap_rejections = 0;
    int delta_e_rejections = 0;
    int empty_patches = 0;
    int too_large = 0;

    PlacementStats& operator+=(const PlacementStats& o);
};

struct PlacementResult {
    cv::Mat image;
    std::vector<Placement> added;
    PlacementStats stats;
};

/// Pastes up to `max_instances` transformed patches into a copy of `image` (CV_8UC3, BGR).
/// A placement is accepted when its box has zero intersection area with every existing
/// and previously pasted box and the ΔE between the alpha-weighted patch colour and the
/// destination region does not exceed `delta_e_max`. Throws std::invalid_argument when
/// `assets` is empty.
PlacementResult place_instances(const cv::Mat& image, std::span<const LabeledBox> existing,
                                std::span<const PatchAsset> assets, const AugmentConfig& cfg,
                                std::mt19937_64& rng);

/// Loads `<label>_<id>.<ext>` RGBA files. Files that fail to load or are fully transparent
/// are reported in `errors` and skipped.
std::vector<PatchAsset> load_patch_library(const std::string& dir,
                                           std::vector<std::string>* errors = nullptr);

struct AugmentDatasetOptions {
    std::string images_dir;
    std::string labels_dir;
    std::string patches_dir;
    std::string out_dir;
    AugmentConfig cfg;
};

struct ImageAugmentResult {
    std::string image;
    PlacementStats stats;
    std::string error;  // empty on success
};

struct AugmentReport {
    std::vector<ImageAugmentResult> images;
    PlacementStats totals;
    std::vector<std::string> errors;

    std::string to_json() const;
};

/// Seed used for one image: the dataset seed mixed with a hash of the image file name, so
/// results do not depend on processing order.
std::uint64_t image_seed(std::uint64_t seed, const std::string& file_name);

/// Batch driver: writes `<out>/images/<name>` and `<out>/labels/<stem>.txt` per input image
/// plus `<out>/report.json`. Images without placements are copied byte for byte.
AugmentReport augment_dataset(const AugmentDatasetOptions& options);

}  // namespace dronetile
