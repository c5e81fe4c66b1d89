#include "dronetile/evaluation.hpp"

#include "dronetile/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace dronetile {

std::size_t GroundTruth::box_count() const {
    std::size_t n = 0;
    for (const auto& [frame, boxes] : entries) n += boxes.size();
    return n;
}

std::vector<ScoredFlag> match_detections(std::span<const Detection> dets,
                                         std::span<const BoundingBox> gts, double iou_min) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<bool> taken(gts.size(), false);
    std::vector<ScoredFlag> flags;
    flags.reserve(dets.size());
    for (std::size_t i : order) {
        double best = -1.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double v = iou(dets[i].box, gts[g]);
            if (v >= iou_min && v > best) {
                best = v;
                best_gt = g;
            }
        }
        const bool tp = best_gt < gts.size();
        if (tp) taken[best_gt] = true;
        flags.push_back({dets[i].score, tp});
    }
    return flags;
}

double average_precision(std::span<const ScoredFlag> flags, std::size_t n_gt,
                         ApInterpolation interp) {
    if (n_gt == 0) return flags.empty() ? 1.0 : 0.0;

    std::vector<ScoredFlag> sorted(flags.begin(), flags.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const ScoredFlag& a, const ScoredFlag& b) {
        if (a.score != b.score) return a.score > b.score;
        return !a.true_positive && b.true_positive;
    });

    std::vector<double> recall, precision;
    recall.reserve(sorted.size());
    precision.reserve(sorted.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i].true_positive) ++tp;
        recall.push_back(double(tp) / double(n_gt));
        precision.push_back(double(tp) / double(i + 1));
    }
    // Envelope: precision at each rank becomes the best precision at any later rank.
    for (std::size_t i = precision.size(); i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);

    if (interp == ApInterpolation::eleven_point) {
        double sum = 0.0;
        for (int k = 0; k <= 10; ++k) {
            const double r = k / 10.0;
            double p = 0.0;
            for (std::size_t i = 0; i < recall.size(); ++i)
                if (recall[i] >= r - 1e-12) {
                    p = precision[i];
                    break;
                }
            sum += p;
        }
        return sum / 11.0;
    }

    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] > prev_recall) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    return std::clamp(ap, 0.0, 1.0);
}

EvalReport evaluate(const std::map<std::string, std::vector<Detection>>& detections,
                    const std::map<std::string, GroundTruth>& ground_truth, double iou_min,
                    ApInterpolation interp) {
    for (const auto& [video, dets] : detections)
        if (!ground_truth.contains(video))
            throw StructuralError("detections reference unknown video `" + video + "`");

    EvalReport report;
    for (const auto& [video, gt] : ground_truth) {
        std::map<std::int64_t, std::vector<Detection>> by_frame;
        if (auto it = detections.find(video); it != detections.end())
            for (const Detection& d : it->second)
                if (d.label == Label::drone) by_frame[d.frame].push_back(d);

        std::vector<ScoredFlag> flags;
        static const std::vector<BoundingBox> kNone;
        for (const auto& [frame, dets] : by_frame) {
            auto g = gt.entries.find(frame);
            const auto& boxes = g == gt.entries.end() ? kNone : g->second;
            auto f = match_detections(dets, boxes, iou_min);
            flags.insert(flags.end(), f.begin(), f.end());
        }

        VideoScore s;
        s.n_gt = gt.box_count();
        s.tp = static_cast<std::size_t>(
            std::count_if(flags.begin(), flags.end(), [](const ScoredFlag& f) {
                return f.true_positive;
            }));
        s.fp = flags.size() - s.tp;
        s.fn = s.n_gt - s.tp;
        s.ap50 = average_precision(flags, s.n_gt, interp);
        report.per_video[video] = s;
    }

    if (!report.per_video.empty()) {
        double sum = 0.0;
        for (const auto& [video, s] : report.per_video) sum += s.ap50;
        report.average_ap50 = sum / double(report.per_video.size());
    }
    return report;
}

std::string format_report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "video,ap50,tp,fp,fn,n_gt\n";
    std::size_t tp = 0, fp = 0, fn = 0, n_gt = 0;
    for (const auto& [video, s] : report.per_video) {
        out << video << ',' << format_fixed(s.ap50, 4) << ',' << s.tp << ',' << s.fp << ','
            << s.fn << ',' << s.n_gt << '\n';
        tp += s.tp;
        fp += s.fp;
        fn += s.fn;
        n_gt += s.n_gt;
    }
    out << "average," << format_fixed(report.average_ap50, 4) << ',' << tp << ',' << fp << ','
        << fn << ',' << n_gt << '\n';
    return out.str();
}

std::string format_report_table(const EvalReport& report) {
    std::size_t width = 7;
    for (const auto& [video, s] : report.per_video) width = std::max(width, video.size());
    std::ostringstream out;
    auto row = [&](const std::string& name, const std::string& ap, const std::string& rest) {
        out << name << std::string(width - name.size() + 2, ' ') << ap << rest << '\n';
    };
    row("video", "mAP50 ", "     tp     fp     fn   n_gt");
    for (const auto& [video, s] : report.per_video) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " %6zu %6zu %6zu %6zu", s.tp, s.fp, s.fn, s.n_gt);
        row(video, format_fixed(s.ap50, 4), buf);
    }
    row("Average", format_fixed(report.average_ap50, 4), "");
    return out.str();
}

}  // namespace dronetile
