#include "dronetile/augment.hpp"

#include "dronetile/error.hpp"
#include "text_util.hpp"

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

namespace dronetile {

namespace fs = std::filesystem;

bool PatchAsset::valid() const {
    if (pixels.empty() || pixels.type() != CV_8UC4) return false;
    cv::Mat tight = tighten_to_alpha(pixels);
    return !tight.empty() && tight.size() == pixels.size();
}

cv::Mat tighten_to_alpha(const cv::Mat& bgra) {
    CV_Assert(bgra.type() == CV_8UC4);
    cv::Mat alpha;
    cv::extractChannel(bgra, alpha, 3);
    std::vector<cv::Point> nz;
    cv::findNonZero(alpha, nz);
    if (nz.empty()) return {};
    return bgra(cv::boundingRect(nz)).clone();
}

PatchTransformConfig PatchTransformConfig::disabled() {
    PatchTransformConfig c;
    c.blur = c.dropout = c.noise = c.photometric = false;
    return c;
}

void AugmentConfig::validate() const {
    if (!(scale.min > 0.0 && scale.min <= scale.max && scale.max <= 1.0))
        throw std::invalid_argument("scale range must satisfy 0 < min <= max <= 1");
    if (max_instances < 0) throw std::invalid_argument("max_instances must be >= 0");
    if (max_placement_attempts < 1)
        throw std::invalid_argument("max_placement_attempts must be positive");
    if (!(delta_e_max >= 0.0)) throw std::invalid_argument("delta_e_max must be >= 0");
}

PlacementStats& PlacementStats::operator+=(const PlacementStats& o) {
    placed += o.placed;
    skipped += o.skipped;
    overlap_rejections += o.overlap_rejections;
    delta_e_rejections += o.delta_e_rejections;
    empty_patches += o.empty_patches;
    too_large += o.too_large;
    return *this;
}

namespace {

double sample(const Range& r, std::mt19937_64& rng) {
    if (!(r.max > r.min)) return r.min;
    return std::uniform_real_distribution<double>(r.min, r.max)(rng);
}

std::uint8_t saturate(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void apply_photometric(cv::Mat& bgra, double brightness, double contrast, double gamma) {
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) {
        const double g = 255.0 * std::pow(v / 255.0, gamma);
        lut[static_cast<std::size_t>(v)] = saturate((g - 127.5) * contrast + 127.5 + brightness);
    }
    for (int y = 0; y < bgra.rows; ++y) {
        auto* row = bgra.ptr<cv::Vec4b>(y);
        for (int x = 0; x < bgra.cols; ++x)
            for (int c = 0; c < 3; ++c) row[x][c] = lut[row[x][c]];
    }
}

// Blur on premultiplied colour so transparent pixels do not bleed black into the edges.
void apply_blur(cv::Mat& bgra, double sigma) {
    cv::Mat f;
    bgra.convertTo(f, CV_64FC4, 1.0 / 255.0);
    for (int y = 0; y < f.rows; ++y) {
        auto* row = f.ptr<cv::Vec4d>(y);
        for (int x = 0; x < f.cols; ++x)
            for (int c = 0; c < 3; ++c) row[x][c] *= row[x][3];
    }
    cv::Mat blurred;
    cv::GaussianBlur(f, blurred, cv::Size(0, 0), sigma, sigma, cv::BORDER_CONSTANT);
    for (int y = 0; y < bgra.rows; ++y) {
        auto* dst = bgra.ptr<cv::Vec4b>(y);
        const auto* src = blurred.ptr<cv::Vec4d>(y);
        for (int x = 0; x < bgra.cols; ++x) {
            if (dst[x][3] == 0) continue;  // never gains opacity
            const double a = src[x][3];
            for (int c = 0; c < 3; ++c)
                dst[x][c] = a > 0 ? saturate(src[x][c] / a * 255.0) : dst[x][c];
            dst[x][3] = saturate(a * 255.0);
        }
    }
}

void apply_noise(cv::Mat& bgra, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, sigma);
    for (int y = 0; y < bgra.rows; ++y) {
        auto* row = bgra.ptr<cv::Vec4b>(y);
        for (int x = 0; x < bgra.cols; ++x)
            for (int c = 0; c < 3; ++c) row[x][c] = saturate(row[x][c] + n(rng));
    }
}

void apply_dropout(cv::Mat& bgra, double prob, std::mt19937_64& rng) {
    std::bernoulli_distribution drop(std::clamp(prob, 0.0, 1.0));
    for (int y = 0; y < bgra.rows; ++y) {
        auto* row = bgra.ptr<cv::Vec4b>(y);
        for (int x = 0; x < bgra.cols; ++x)
            if (drop(rng)) row[x] = cv::Vec4b(0, 0, 0, 0);
    }
}

Lab alpha_weighted_mean_lab(const cv::Mat& bgra) {
    double L = 0, a = 0, b = 0, w = 0;
    for (int y = 0; y < bgra.rows; ++y) {
        const auto* row = bgra.ptr<cv::Vec4b>(y);
        for (int x = 0; x < bgra.cols; ++x) {
            const double alpha = row[x][3] / 255.0;
            if (alpha == 0) continue;
            const Lab c = srgb_to_lab(row[x][2], row[x][1], row[x][0]);
            L += alpha * c.L;
            a += alpha * c.a;
            b += alpha * c.b;
            w += alpha;
        }
    }
    return w > 0 ? Lab{L / w, a / w, b / w} : Lab{};
}

cv::Mat to_lab_image(const cv::Mat& bgr) {
    cv::Mat lab(bgr.size(), CV_64FC3);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* src = bgr.ptr<cv::Vec3b>(y);
        auto* dst = lab.ptr<cv::Vec3d>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            const Lab c = srgb_to_lab(src[x][2], src[x][1], src[x][0]);
            dst[x] = cv::Vec3d(c.L, c.a, c.b);
        }
    }
    return lab;
}

Lab region_mean_lab(const cv::Mat& lab, const cv::Rect& r) {
    double L = 0, a = 0, b = 0;
    for (int y = r.y; y < r.y + r.height; ++y) {
        const auto* row = lab.ptr<cv::Vec3d>(y);
        for (int x = r.x; x < r.x + r.width; ++x) {
            L += row[x][0];
            a += row[x][1];
            b += row[x][2];
        }
    }
    const double n = double(r.area());
    return {L / n, a / n, b / n};
}

void composite(cv::Mat& bgr, const cv::Mat& bgra, cv::Point at) {
    for (int y = 0; y < bgra.rows; ++y) {
        const auto* src = bgra.ptr<cv::Vec4b>(y);
        auto* dst = bgr.ptr<cv::Vec3b>(y + at.y) + at.x;
        for (int x = 0; x < bgra.cols; ++x) {
            const double alpha = src[x][3] / 255.0;
            if (alpha == 0) continue;
            for (int c = 0; c < 3; ++c)
                dst[x][c] = saturate(alpha * src[x][c] + (1.0 - alpha) * dst[x][c]);
        }
    }
}

}  // namespace

PatchAsset transform_patch(const PatchAsset& patch, const AugmentConfig& cfg,
                           std::mt19937_64& rng) {
    PatchAsset out{patch.pixels.clone(), patch.label, patch.id};
    if (out.pixels.empty()) return out;
    const PatchTransformConfig& t = cfg.transforms;

    if (t.photometric) {
        const double brightness = sample(t.brightness, rng);
        const double contrast = sample(t.contrast, rng);
        const double gamma = sample(t.gamma, rng);
        apply_photometric(out.pixels, brightness, contrast, gamma);
    }
    if (t.blur) {
        const double sigma = sample(t.blur_sigma, rng);
        if (sigma > 0) apply_blur(out.pixels, sigma);
    }
    if (t.noise) {
        const double sigma = sample(t.noise_sigma, rng);
        if (sigma > 0) apply_noise(out.pixels, sigma, rng);
    }
    if (t.dropout) {
        const double prob = sample(t.dropout_prob, rng);
        if (prob > 0) apply_dropout(out.pixels, prob, rng);
    }
    out.pixels = tighten_to_alpha(out.pixels);
    return out;
}

PlacementResult place_instances(const cv::Mat& image, std::span<const LabeledBox> existing,
                                std::span<const PatchAsset> assets, const AugmentConfig& cfg,
                                std::mt19937_64& rng) {
    if (assets.empty()) throw std::invalid_argument("patch library is empty");
    if (image.empty() || image.type() != CV_8UC3)
        throw std::invalid_argument("place_instances expects a non-empty BGR image");
    cfg.validate();

    PlacementResult result;
    result.image = image.clone();
    const int W = image.cols;
    const int H = image.rows;
    cv::Mat lab = to_lab_image(result.image);

    std::vector<BoundingBox> occupied;
    for (const LabeledBox& e : existing) occupied.push_back(e.box);

    std::uniform_int_distribution<std::size_t> pick(0, assets.size() - 1);
    for (int instance = 0; instance < cfg.max_instances; ++instance) {
        const PatchAsset& asset = assets[pick(rng)];
        PatchAsset patch = transform_patch(asset, cfg, rng);
        if (patch.pixels.empty()) {
            ++result.stats.empty_patches;
            ++result.stats.skipped;
            continue;
        }

        const double s = sample(cfg.scale, rng);
        const int pw = std::max(1, int(std::lround(s * W)));
        const int ph = std::max(
            1, int(std::lround(double(pw) * patch.pixels.rows / patch.pixels.cols)));
        if (pw > W || ph > H) {
            ++result.stats.too_large;
            ++result.stats.skipped;
            continue;
        }
        cv::Mat scaled;
        cv::resize(patch.pixels, scaled, cv::Size(pw, ph), 0, 0, cv::INTER_LINEAR);
        scaled = tighten_to_alpha(scaled);
        if (scaled.empty()) {
            ++result.stats.empty_patches;
            ++result.stats.skipped;
            continue;
        }
        const Lab patch_mean = alpha_weighted_mean_lab(scaled);

        std::uniform_int_distribution<int> px(0, W - scaled.cols);
        std::uniform_int_distribution<int> py(0, H - scaled.rows);
        bool accepted = false;
        for (int attempt = 0; attempt < cfg.max_placement_attempts; ++attempt) {
            const int x = px(rng);
            const int y = py(rng);
            const BoundingBox box(x, y, x + scaled.cols, y + scaled.rows);
            const bool overlaps = std::any_of(occupied.begin(), occupied.end(),
                                              [&](const BoundingBox& o) {
                                                  return intersection_area(o, box) > 0;
                                              });
            if (overlaps) {
                ++result.stats.overlap_rejections;
                continue;
            }
            const cv::Rect region(x, y, scaled.cols, scaled.rows);
            const Lab region_mean = region_mean_lab(lab, region);
            const double de = delta_e(patch_mean, region_mean);
            if (de > cfg.delta_e_max) {
                ++result.stats.delta_e_rejections;
                continue;
            }

            composite(result.image, scaled, region.tl());
            to_lab_image(result.image(region)).copyTo(lab(region));
            occupied.push_back(box);
            result.added.push_back({{patch.label, box}, patch.id, patch_mean, region_mean, de});
            ++result.stats.placed;
            accepted = true;
            break;
        }
        if (!accepted) ++result.stats.skipped;
    }
    return result;
}

std::vector<PatchAsset> load_patch_library(const std::string& dir,
                                           std::vector<std::string>* errors) {
    if (!fs::is_directory(dir)) throw ParseError("patch directory `" + dir + "` not found");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    auto report = [&](const std::string& msg) {
        if (errors) errors->push_back(msg);
    };
    std::vector<PatchAsset> out;
    for (const fs::path& path : files) {
        const std::string stem = path.stem().string();
        const auto underscore = stem.find('_');
        if (underscore == std::string::npos) {
            report(path.string() + ": expected `<label>_<id>` file name");
            continue;
        }
        auto label = parse_label(stem.substr(0, underscore));
        if (!label) {
            report(path.string() + ": unknown label prefix");
            continue;
        }
        cv::Mat pixels = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
        if (pixels.empty() || pixels.type() != CV_8UC4) {
            report(path.string() + ": not an 8-bit RGBA image");
            continue;
        }
        pixels = tighten_to_alpha(pixels);
        if (pixels.empty()) {
            report(path.string() + ": fully transparent");
            continue;
        }
        out.push_back({pixels, *label, stem.substr(underscore + 1)});
    }
    return out;
}

std::uint64_t image_seed(std::uint64_t seed, const std::string& file_name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : file_name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return seed ^ h;
}

std::string AugmentReport::to_json() const {
    auto stats_json = [](const PlacementStats& s) {
        return nlohmann::ordered_json{{"placed", s.placed},
                                      {"skipped", s.skipped},
                                      {"overlap_rejections", s.overlap_rejections},
                                      {"delta_e_rejections", s.delta_e_rejections},
                                      {"empty_patches", s.empty_patches},
                                      {"too_large", s.too_large}};
    };
    nlohmann::ordered_json j;
    j["totals"] = stats_json(totals);
    j["images"] = nlohmann::ordered_json::array();
    for (const ImageAugmentResult& r : images) {
        nlohmann::ordered_json e{{"image", r.image}};
        if (r.error.empty())
            e["stats"] = stats_json(r.stats);
        else
            e["error"] = r.error;
        j["images"].push_back(e);
    }
    j["errors"] = errors;
    return j.dump(2) + "\n";
}

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

}  // namespace

AugmentReport augment_dataset(const AugmentDatasetOptions& options) {
    options.cfg.validate();
    AugmentReport report;
    if (!fs::is_directory(options.images_dir))
        throw ParseError("image directory `" + options.images_dir + "` not found");

    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(options.images_dir))
        if (entry.is_regular_file() && is_image_file(entry.path())) images.push_back(entry.path());
    std::sort(images.begin(), images.end());

    const fs::path out_images = fs::path(options.out_dir) / "images";
    const fs::path out_labels = fs::path(options.out_dir) / "labels";
    fs::create_directories(out_images);
    fs::create_directories(out_labels);

    std::vector<PatchAsset> assets;
    if (!images.empty()) {
        assets = load_patch_library(options.patches_dir, &report.errors);
        if (assets.empty()) throw std::invalid_argument("patch library is empty");
    }

    for (const fs::path& path : images) {
        ImageAugmentResult item;
        item.image = path.filename().string();
        try {
            cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
            if (img.empty()) throw ParseError("cannot decode image");

            std::vector<LabeledBox> existing;
            const fs::path label_path =
                fs::path(options.labels_dir) / (path.stem().string() + ".txt");
            if (fs::exists(label_path))
                existing = parse_normalized_label(read_file(label_path.string()), img.cols,
                                                  img.rows);

            std::mt19937_64 rng(image_seed(options.cfg.rng_seed, item.image));
            PlacementResult placed = place_instances(img, existing, assets, options.cfg, rng);
            item.stats = placed.stats;

            const fs::path image_out = out_images / path.filename();
            if (placed.added.empty()) {
                fs::copy_file(path, image_out, fs::copy_options::overwrite_existing);
            } else if (!cv::imwrite(image_out.string(), placed.image)) {
                throw std::runtime_error("cannot write `" + image_out.string() + "`");
            }
            for (const Placement& p : placed.added) existing.push_back(p.added);
            write_file((out_labels / (path.stem().string() + ".txt")).string(),
                       serialize_normalized_label(existing, img.cols, img.rows));
            report.totals += item.stats;
        } catch (const std::exception& e) {
            item.error = e.what();
            report.errors.push_back(item.image + ": " + e.what());
        }
        report.images.push_back(std::move(item));
    }
    write_file((fs::path(options.out_dir) / "report.json").string(), report.to_json());
    return report;
}

}  // namespace dronetile
