#pragma once

#include <array>
#include <vector>

#include "thermoscope/data/types.hpp"

namespace thermoscope::detection {

using data::BoundingBox;

// Center-size offsets scaled by the usual SSD variances.
inline constexpr double kCenterVariance = 0.1;
inline constexpr double kSizeVariance = 0.2;

using BoxOffsets = std::array<double, 4>;  // dx, dy, dw, dh

BoxOffsets encode_box(const BoundingBox& target, const BoundingBox& anchor);
BoundingBox decode_box(const BoxOffsets& offsets, const BoundingBox& anchor);

struct AnchorLayout {
    std::vector<double> scales;   // fractions of the input side
    std::vector<double> aspects;  // width / height
    int per_cell() const { return static_cast<int>(scales.size() * aspects.size()); }
};

// Anchor n = (y * grid_w + x) * per_cell + a, centred on its cell.
std::vector<BoundingBox> make_anchors(int input_size, int grid_h, int grid_w, const AnchorLayout& layout);

// Anchor -> index of the assigned ground truth, or -1 for background. An
// anchor is positive at IoU >= positive_iou; every ground truth also claims
// its best anchor.
std::vector<int> match_anchors(const std::vector<BoundingBox>& anchors, const std::vector<BoundingBox>& gts,
                               double positive_iou = 0.5);

// Greedy NMS; returns kept indices in descending score order (ties by index).
std::vector<std::size_t> nms(const std::vector<BoundingBox>& boxes, const std::vector<double>& scores,
                             double iou_threshold);

}  // namespace thermoscope::detection
