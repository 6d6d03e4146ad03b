#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/data/types.hpp"
#include "thermoscope/detection/types.hpp"

namespace thermoscope::eval {

using detection::Detection;

inline constexpr double kDefaultIouThreshold = 0.5;

// Intersection over union; 0 when either box is degenerate.
double iou(const data::BoundingBox& a, const data::BoundingBox& b);

enum class Interpolation { all_point, voc2007_11pt };

std::string to_string(Interpolation mode);  // "all-point", "voc2007-11pt"
Interpolation parse_interpolation(const std::string& s);

// Outcome of one detection. Matches to difficult ground truth are ignored:
// neither credited nor penalised.
enum class MatchFlag { tp, fp, ignored };

struct MatchResult {
    std::vector<std::size_t> order;  // input indices in descending confidence
    std::vector<MatchFlag> flags;    // parallel to order
    std::vector<bool> gt_matched;    // parallel to the ground-truth list
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;  // unmatched non-difficult ground truth
};

// Descending confidence; ties keep input order.
std::vector<std::size_t> confidence_order(const std::vector<Detection>& dets);

// One image, one class. Each detection takes the highest-IoU ground truth
// still available (unmatched, or difficult) if the IoU reaches the
// threshold; otherwise it is a false positive.
MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<data::ObjectAnnotation>& gts,
                             double iou_threshold = kDefaultIouThreshold);

struct PRPoint {
    double recall = 0;
    double precision = 0;
};

// image_id -> ground truth of one class in that image.
using GroundTruthByImage = std::map<std::string, std::vector<data::ObjectAnnotation>>;

struct ClassEvaluation {
    std::optional<double> ap;  // absent when there is no non-difficult ground truth
    std::vector<PRPoint> curve;
    std::size_t gt = 0;  // non-difficult ground truth
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

// Single class across a dataset. Detections on images missing from gts are
// false positives.
ClassEvaluation evaluate_class(const std::vector<Detection>& dets, const GroundTruthByImage& gts,
                               double iou_threshold = kDefaultIouThreshold,
                               Interpolation mode = Interpolation::all_point);

std::optional<double> average_precision(const std::vector<Detection>& dets, const GroundTruthByImage& gts,
                                        double iou_threshold = kDefaultIouThreshold,
                                        Interpolation mode = Interpolation::all_point);

// Area under the precision envelope for a recall/precision sequence.
double ap_from_curve(const std::vector<PRPoint>& curve, Interpolation mode);

// Arithmetic mean. Throws ValidationError on an empty mapping or an absent
// AP: classes without ground truth must be excluded explicitly.
double mean_ap(const std::map<std::string, std::optional<double>>& per_class_ap);
double mean_ap(const std::map<std::string, double>& per_class_ap);

struct WeakLabelReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    // TP / (TP + FP + FN); absent when the denominator is 0.
    std::optional<double> accuracy;
};

WeakLabelReport weak_label_report(std::size_t tp, std::size_t fp, std::size_t fn);
// Aggregated over every class and image of ground_truth.
WeakLabelReport weak_label_report(const std::vector<Detection>& dets, const data::DatasetManifest& ground_truth,
                                  double iou_threshold = kDefaultIouThreshold);
nlohmann::json to_json(const WeakLabelReport& r);

struct ClassReport {
    std::optional<double> ap;
    std::size_t gt = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    friend bool operator==(const ClassReport&, const ClassReport&) = default;
};

struct EvalReport {
    std::map<std::string, ClassReport> classes;
    double map = 0;  // mean over classes with defined AP
    double iou_threshold = kDefaultIouThreshold;
    Interpolation interpolation = Interpolation::all_point;
    std::vector<std::string> excluded_classes;  // no ground truth in the evaluated set
    std::string tag;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
    double iou_threshold = kDefaultIouThreshold;
    Interpolation interpolation = Interpolation::all_point;
    std::string tag;
};

// Scores detections against every record of ground_truth over its class set.
// Detections on image ids outside the manifest are rejected.
EvalReport evaluate(const std::vector<Detection>& dets, const data::DatasetManifest& ground_truth,
                    const EvalOptions& options = {});

}  // namespace thermoscope::eval
