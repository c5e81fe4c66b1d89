#include "dronetile/temporal.hpp"

#include "dronetile/fusion.hpp"

#include <algorithm>
#include <stdexcept>

namespace dronetile {

std::size_t VideoDetections::detection_count() const {
    std::size_t n = 0;
    for (const auto& [frame, dets] : frames) n += dets.size();
    return n;
}

void TemporalConfig::validate() const {
    if (window < 1) throw std::invalid_argument("temporal window must be positive");
    if (!(match_iou >= 0.0 && match_iou <= 1.0))
        throw std::invalid_argument("match_iou must lie in [0,1]");
    if (!(veto_iou >= 0.0 && veto_iou <= 1.0))
        throw std::invalid_argument("veto_iou must lie in [0,1]");
    if (!(border_margin >= 0.0)) throw std::invalid_argument("border_margin must be >= 0");
    if (!(confidence_divisor > 0.0))
        throw std::invalid_argument("confidence_divisor must be positive");
}

namespace {

struct Candidate {
    Detection det;
    int span = 0;  // a + b in timeline positions
};

bool is_original(const Detection& d) { return d.source.kind != Source::Kind::interpolated; }

bool matches_any(const Detection& d, const std::vector<const Detection*>& pool, double min_iou) {
    return std::any_of(pool.begin(), pool.end(), [&](const Detection* e) {
        return e->label == d.label && iou(e->box, d.box) >= min_iou;
    });
}

BoundingBox lerp(const BoundingBox& from, const BoundingBox& to, double t) {
    auto mix = [t](double a, double b) { return a + (b - a) * t; };
    double x1 = mix(from.x1(), to.x1());
    double y1 = mix(from.y1(), to.y1());
    double x2 = mix(from.x2(), to.x2());
    double y2 = mix(from.y2(), to.y2());
    // Rounding can invert a degenerate edge by an ulp.
    return {x1, y1, std::max(x1, x2), std::max(y1, y2)};
}

}  // namespace

VideoDetections interpolate_gaps(const VideoDetections& video, const TemporalConfig& cfg) {
    cfg.validate();
    VideoDetections out = video;
    if (video.frames.empty()) return out;

    std::vector<std::int64_t> timeline;
    std::vector<std::vector<const Detection*>> originals;
    for (const auto& [frame, dets] : video.frames) {
        timeline.push_back(frame);
        auto& o = originals.emplace_back();
        for (const Detection& d : dets)
            if (is_original(d)) o.push_back(&d);
        std::stable_sort(o.begin(), o.end(),
                         [](const Detection* a, const Detection* b) { return canonical_less(*a, *b); });
    }

    const double W = video.frame_width;
    const double H = video.frame_height;
    const double margin = cfg.border_margin * std::max(W, H);
    const auto n = static_cast<int>(timeline.size());

    for (int p = 0; p < n; ++p) {
        const std::int64_t t = timeline[static_cast<std::size_t>(p)];
        const auto& here = originals[static_cast<std::size_t>(p)];
        std::vector<Candidate> candidates;

        for (int a = 1; a <= cfg.window && p - a >= 0; ++a) {
            const auto& left = originals[static_cast<std::size_t>(p - a)];
            for (const Detection* before : left) {
                if (matches_any(*before, here, cfg.match_iou)) continue;
                // A nearer left detection of the same object takes precedence.
                bool shadowed = false;
                for (int k = 1; k < a && !shadowed; ++k)
                    shadowed = matches_any(*before, originals[static_cast<std::size_t>(p - k)],
                                           cfg.match_iou);
                if (shadowed) continue;

                const Detection* after = nullptr;
                int b = 1;
                for (; b <= cfg.window && p + b < n; ++b) {
                    // Originals are score-sorted, so the first hit is the best in its frame.
                    for (const Detection* cand : originals[static_cast<std::size_t>(p + b)]) {
                        if (cand->label == before->label &&
                            iou(before->box, cand->box) >= cfg.match_iou) {
                            after = cand;
                            break;
                        }
                    }
                    if (after != nullptr) break;
                }
                if (after == nullptr) continue;
                if (matches_any(*after, here, cfg.match_iou)) continue;

                const double da = double(t - timeline[static_cast<std::size_t>(p - a)]);
                const double db = double(timeline[static_cast<std::size_t>(p + b)] - t);
                Detection d;
                d.box = lerp(before->box, after->box, da / (da + db));
                d.label = before->label;
                d.score = ((before->score + after->score) / 2.0) / cfg.confidence_divisor;
                d.frame = t;
                d.source = Source::interpolated();
                candidates.push_back({d, a + b});
            }
        }
        if (candidates.empty()) continue;

        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& x, const Candidate& y) {
                             if (x.det.score != y.det.score) return x.det.score > y.det.score;
                             if (x.span != y.span) return x.span < y.span;
                             return x.det.box < y.det.box;
                         });

        auto& slot = out.frames[t];
        const std::size_t existing = slot.size();
        for (const Candidate& c : candidates) {
            const BoundingBox& box = c.det.box;
            if (box.x1() < margin || box.y1() < margin || box.x2() > W - margin ||
                box.y2() > H - margin)
                continue;
            const bool vetoed = std::any_of(slot.begin(), slot.end(), [&](const Detection& e) {
                return iou(e.box, box) >= cfg.veto_iou;
            });
            if (vetoed) continue;
            slot.push_back(c.det);
        }
        std::sort(slot.begin() + static_cast<std::ptrdiff_t>(existing), slot.end(),
                  canonical_less);
    }
    return out;
}

}  // namespace dronetile
