#include "dronetile/pipeline.hpp"

#include "dronetile/error.hpp"
#include "text_util.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <filesystem>

namespace dronetile {

namespace fs = std::filesystem;

namespace {

const cv::Scalar kDroneColor(0, 0, 255);
const cv::Scalar kBirdColor(255, 128, 0);
const cv::Scalar kInterpolatedColor(0, 255, 255);
const cv::Scalar kTruthColor(0, 200, 0);

// Outline pixels: the box's first and last covered rows/columns.
cv::Rect outline_rect(const BoundingBox& b) {
    const int x1 = int(std::lround(b.x1()));
    const int y1 = int(std::lround(b.y1()));
    const int x2 = std::max(x1 + 1, int(std::lround(b.x2())));
    const int y2 = std::max(y1 + 1, int(std::lround(b.y2())));
    return {x1, y1, x2 - x1, y2 - y1};
}

void dashed_rect(cv::Mat& img, const cv::Rect& r, const cv::Scalar& color) {
    const cv::Vec3b c(cv::saturate_cast<uchar>(color[0]), cv::saturate_cast<uchar>(color[1]),
                      cv::saturate_cast<uchar>(color[2]));
    auto put = [&](int x, int y) {
        if (x >= 0 && y >= 0 && x < img.cols && y < img.rows) img.at<cv::Vec3b>(y, x) = c;
    };
    const int x2 = r.x + r.width - 1, y2 = r.y + r.height - 1;
    for (int x = r.x; x <= x2; ++x)
        if (((x - r.x) / 4) % 2 == 0) {
            put(x, r.y);
            put(x, y2);
        }
    for (int y = r.y; y <= y2; ++y)
        if (((y - r.y) / 4) % 2 == 0) {
            put(r.x, y);
            put(x2, y);
        }
}

}  // namespace

void draw_annotations(cv::Mat& image, const std::vector<Detection>& detections,
                      const std::vector<BoundingBox>& ground_truth) {
    for (const BoundingBox& g : ground_truth) {
        const cv::Rect r = outline_rect(g);
        cv::rectangle(image, r.tl(), r.br() - cv::Point(1, 1), kTruthColor, 1, cv::LINE_8);
    }
    for (const Detection& d : detections) {
        const cv::Rect r = outline_rect(d.box);
        const bool interpolated = d.source.kind == Source::Kind::interpolated;
        const cv::Scalar color = interpolated        ? kInterpolatedColor
                                 : d.label == Label::drone ? kDroneColor
                                                           : kBirdColor;
        if (interpolated)
            dashed_rect(image, r, color);
        else
            cv::rectangle(image, r.tl(), r.br() - cv::Point(1, 1), color, 1, cv::LINE_8);
        cv::putText(image, format_fixed(d.score, 2), cv::Point(r.x, std::max(10, r.y - 3)),
                    cv::FONT_HERSHEY_PLAIN, 0.8, color, 1, cv::LINE_8);
    }
}

RenderReport render_annotations(const std::vector<FrameEntry>& manifest,
                                const std::vector<DetectionRecord>& detections,
                                const std::map<std::string, GroundTruth>* ground_truth,
                                const std::string& out_dir, const FrameLoader& loader) {
    std::map<std::pair<std::string, std::int64_t>, std::vector<Detection>> by_frame;
    for (const DetectionRecord& r : detections) by_frame[{r.video, r.frame}].push_back(to_detection(r));

    RenderReport report;
    for (const FrameEntry& entry : manifest) {
        const std::string where = entry.video + " frame " + std::to_string(entry.frame);
        try {
            const fs::path dir = fs::path(out_dir) / entry.video;
            fs::create_directories(dir);
            const fs::path target = dir / fs::path(entry.path).filename();

            std::vector<Detection> dets;
            if (auto it = by_frame.find({entry.video, entry.frame}); it != by_frame.end())
                dets = it->second;
            std::vector<BoundingBox> truth;
            if (ground_truth) {
                if (auto v = ground_truth->find(entry.video); v != ground_truth->end())
                    if (auto f = v->second.entries.find(entry.frame); f != v->second.entries.end())
                        truth = f->second;
            }

            cv::Mat image = loader(entry);
            auto outside = [&](const BoundingBox& b) {
                return b.x1() < -0.5 || b.y1() < -0.5 || b.x2() > image.cols + 0.5 ||
                       b.y2() > image.rows + 0.5;
            };
            for (const Detection& d : dets)
                if (outside(d.box)) throw StructuralError("detection lies outside the frame");
            for (const BoundingBox& b : truth)
                if (outside(b)) throw StructuralError("ground-truth box lies outside the frame");

            if (dets.empty() && truth.empty() && fs::exists(entry.path)) {
                fs::copy_file(entry.path, target, fs::copy_options::overwrite_existing);
            } else {
                draw_annotations(image, dets, truth);
                if (!cv::imwrite(target.string(), image))
                    throw std::runtime_error("cannot write `" + target.string() + "`");
            }
            ++report.written;
        } catch (const std::exception& e) {
            report.errors.push_back(where + ": " + e.what());
        }
    }
    return report;
}

}  // namespace dronetile
