#include "thermoscope/detection/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "thermoscope/error.hpp"
#include "thermoscope/eval/voc_eval.hpp"

namespace thermoscope::detection {

BoxOffsets encode_box(const BoundingBox& t, const BoundingBox& a) {
    const double acx = (a.x_min + a.x_max) / 2;
    const double acy = (a.y_min + a.y_max) / 2;
    const double tcx = (t.x_min + t.x_max) / 2;
    const double tcy = (t.y_min + t.y_max) / 2;
    return {(tcx - acx) / (a.width() * kCenterVariance), (tcy - acy) / (a.height() * kCenterVariance),
            std::log(t.width() / a.width()) / kSizeVariance, std::log(t.height() / a.height()) / kSizeVariance};
}

BoundingBox decode_box(const BoxOffsets& o, const BoundingBox& a) {
    const double cx = (a.x_min + a.x_max) / 2 + o[0] * kCenterVariance * a.width();
    const double cy = (a.y_min + a.y_max) / 2 + o[1] * kCenterVariance * a.height();
    // Clamp the exponent so an untrained head cannot overflow.
    const double w = a.width() * std::exp(std::clamp(o[2] * kSizeVariance, -8.0, 8.0));
    const double h = a.height() * std::exp(std::clamp(o[3] * kSizeVariance, -8.0, 8.0));
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

std::vector<BoundingBox> make_anchors(int input_size, int grid_h, int grid_w, const AnchorLayout& layout) {
    if (grid_h < 1 || grid_w < 1 || layout.per_cell() == 0) throw DimensionError("anchors: empty grid or layout");
    const double step_y = static_cast<double>(input_size) / grid_h;
    const double step_x = static_cast<double>(input_size) / grid_w;
    std::vector<BoundingBox> out;
    out.reserve(static_cast<std::size_t>(grid_h) * grid_w * layout.per_cell());
    for (int y = 0; y < grid_h; ++y) {
        for (int x = 0; x < grid_w; ++x) {
            const double cx = (x + 0.5) * step_x;
            const double cy = (y + 0.5) * step_y;
            for (double s : layout.scales) {
                for (double ar : layout.aspects) {
                    const double w = s * input_size * std::sqrt(ar);
                    const double h = s * input_size / std::sqrt(ar);
                    out.push_back({cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2});
                }
            }
        }
    }
    return out;
}

std::vector<int> match_anchors(const std::vector<BoundingBox>& anchors, const std::vector<BoundingBox>& gts,
                               double positive_iou) {
    std::vector<int> assigned(anchors.size(), -1);
    std::vector<double> best(anchors.size(), 0.0);
    for (std::size_t g = 0; g < gts.size(); ++g) {
        for (std::size_t n = 0; n < anchors.size(); ++n) {
            const double v = eval::iou(anchors[n], gts[g]);
            if (v > best[n]) {
                best[n] = v;
                if (v >= positive_iou) assigned[n] = static_cast<int>(g);
            }
        }
    }
    for (std::size_t g = 0; g < gts.size(); ++g) {
        std::size_t arg = 0;
        double top = -1.0;
        for (std::size_t n = 0; n < anchors.size(); ++n) {
            const double v = eval::iou(anchors[n], gts[g]);
            if (v > top) {
                top = v;
                arg = n;
            }
        }
        if (top > 0.0) assigned[arg] = static_cast<int>(g);
    }
    return assigned;
}

std::vector<std::size_t> nms(const std::vector<BoundingBox>& boxes, const std::vector<double>& scores,
                             double iou_threshold) {
    if (boxes.size() != scores.size()) throw DimensionError("nms: boxes and scores differ in length");
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::size_t> keep;
    for (std::size_t i : order) {
        const bool suppressed = std::any_of(keep.begin(), keep.end(), [&](std::size_t k) {
            return eval::iou(boxes[k], boxes[i]) > iou_threshold;
        });
        if (!suppressed) keep.push_back(i);
    }
    return keep;
}

}  // namespace thermoscope::detection
