#include "thermoscope/eval/voc_eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "thermoscope/error.hpp"

namespace thermoscope::eval {

double iou(const data::BoundingBox& a, const data::BoundingBox& b) {
    if (!a.valid() || !b.valid()) return 0.0;
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

std::string to_string(Interpolation mode) {
    return mode == Interpolation::all_point ? "all-point" : "voc2007-11pt";
}

Interpolation parse_interpolation(const std::string& s) {
    if (s == "all-point") return Interpolation::all_point;
    if (s == "voc2007-11pt") return Interpolation::voc2007_11pt;
    throw ConfigError("unknown interpolation '" + s + "' (expected all-point or voc2007-11pt)");
}

std::vector<std::size_t> confidence_order(const std::vector<Detection>& dets) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
    return order;
}

MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<data::ObjectAnnotation>& gts,
                             double iou_threshold) {
    if (!dets.empty()) {
        for (const auto& d : dets) {
            if (d.image_id != dets.front().image_id || d.label != dets.front().label) {
                throw ValidationError("match_detections: detections must share one image and one class");
            }
        }
        for (const auto& g : gts) {
            if (g.label != dets.front().label) {
                throw ValidationError("match_detections: ground truth label '" + g.label +
                                      "' differs from the detections' class '" + dets.front().label + "'");
            }
        }
    }
    MatchResult r;
    r.order = confidence_order(dets);
    r.gt_matched.assign(gts.size(), false);
    for (std::size_t i : r.order) {
        double best = -1.0;
        std::size_t arg = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (r.gt_matched[g] && !gts[g].difficult) continue;
            const double v = iou(dets[i].box, gts[g].box);
            if (v > best) {
                best = v;
                arg = g;
            }
        }
        if (arg < gts.size() && best >= iou_threshold) {
            if (gts[arg].difficult) {
                r.flags.push_back(MatchFlag::ignored);
            } else {
                r.gt_matched[arg] = true;
                r.flags.push_back(MatchFlag::tp);
                ++r.tp;
            }
        } else {
            r.flags.push_back(MatchFlag::fp);
            ++r.fp;
        }
    }
    std::size_t countable = 0;
    for (const auto& g : gts) countable += g.difficult ? 0 : 1;
    r.fn = countable - r.tp;
    return r;
}

double ap_from_curve(const std::vector<PRPoint>& curve, Interpolation mode) {
    if (mode == Interpolation::voc2007_11pt) {
        double ap = 0.0;
        for (int i = 0; i <= 10; ++i) {
            const double t = i / 10.0;
            double p = 0.0;
            for (const auto& pt : curve) {
                if (pt.recall >= t) p = std::max(p, pt.precision);
            }
            ap += p / 11.0;
        }
        return ap;
    }
    std::vector<double> mrec{0.0};
    std::vector<double> mpre{0.0};
    for (const auto& pt : curve) {
        mrec.push_back(pt.recall);
        mpre.push_back(pt.precision);
    }
    mrec.push_back(1.0);
    mpre.push_back(0.0);
    for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
    double ap = 0.0;
    for (std::size_t i = 1; i < mrec.size(); ++i) {
        if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
    }
    return ap;
}

ClassEvaluation evaluate_class(const std::vector<Detection>& dets, const GroundTruthByImage& gts,
                               double iou_threshold, Interpolation mode) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw ConfigError("iou_threshold must be in (0, 1]");
    std::set<std::string> labels;
    for (const auto& d : dets) labels.insert(d.label);
    for (const auto& [_, list] : gts) {
        for (const auto& g : list) labels.insert(g.label);
    }
    if (labels.size() > 1) throw ValidationError("average_precision: inputs span more than one class");

    ClassEvaluation out;
    for (const auto& [_, list] : gts) {
        for (const auto& g : list) out.gt += g.difficult ? 0 : 1;
    }

    // Matching is per image; the flags are then ranked globally.
    std::map<std::string, std::vector<std::size_t>> by_image;
    for (std::size_t i = 0; i < dets.size(); ++i) by_image[dets[i].image_id].push_back(i);
    std::vector<MatchFlag> flag(dets.size(), MatchFlag::fp);
    static const std::vector<data::ObjectAnnotation> kNone;
    for (const auto& [image_id, indices] : by_image) {
        std::vector<Detection> local;
        for (std::size_t i : indices) local.push_back(dets[i]);
        const auto it = gts.find(image_id);
        const MatchResult m = match_detections(local, it == gts.end() ? kNone : it->second, iou_threshold);
        for (std::size_t k = 0; k < m.order.size(); ++k) flag[indices[m.order[k]]] = m.flags[k];
    }

    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i : confidence_order(dets)) {
        if (flag[i] == MatchFlag::ignored) continue;
        (flag[i] == MatchFlag::tp ? tp : fp) += 1;
        if (out.gt > 0) {
            out.curve.push_back({static_cast<double>(tp) / static_cast<double>(out.gt),
                                 static_cast<double>(tp) / static_cast<double>(tp + fp)});
        }
    }
    out.tp = tp;
    out.fp = fp;
    out.fn = out.gt - tp;
    if (out.gt > 0) out.ap = ap_from_curve(out.curve, mode);
    return out;
}

std::optional<double> average_precision(const std::vector<Detection>& dets, const GroundTruthByImage& gts,
                                        double iou_threshold, Interpolation mode) {
    return evaluate_class(dets, gts, iou_threshold, mode).ap;
}

double mean_ap(const std::map<std::string, std::optional<double>>& per_class_ap) {
    if (per_class_ap.empty()) throw ValidationError("mean_ap: no classes");
    double sum = 0.0;
    for (const auto& [name, ap] : per_class_ap) {
        if (!ap) {
            throw ValidationError("mean_ap: AP of class '" + name +
                                  "' is undefined (no ground truth); exclude the class explicitly");
        }
        sum += *ap;
    }
    return sum / static_cast<double>(per_class_ap.size());
}

double mean_ap(const std::map<std::string, double>& per_class_ap) {
    std::map<std::string, std::optional<double>> m(per_class_ap.begin(), per_class_ap.end());
    return mean_ap(m);
}

WeakLabelReport weak_label_report(std::size_t tp, std::size_t fp, std::size_t fn) {
    WeakLabelReport r{tp, fp, fn, std::nullopt};
    if (const std::size_t denom = tp + fp + fn; denom > 0) {
        r.accuracy = static_cast<double>(tp) / static_cast<double>(denom);
    }
    return r;
}

namespace {

std::map<std::string, std::map<std::string, std::vector<Detection>>> group_detections(
    const std::vector<Detection>& dets, const data::DatasetManifest& ground_truth) {
    std::map<std::string, std::map<std::string, std::vector<Detection>>> grouped;  // class -> image -> dets
    for (const auto& d : dets) {
        if (!ground_truth.find(d.image_id)) {
            throw ValidationError("detection on image '" + d.image_id + "' which is not in the evaluated set");
        }
        if (!ground_truth.has_class(d.label)) {
            throw ValidationError("detection label '" + d.label + "' is not in the evaluated class set");
        }
        grouped[d.label][d.image_id].push_back(d);
    }
    return grouped;
}

}  // namespace

WeakLabelReport weak_label_report(const std::vector<Detection>& dets, const data::DatasetManifest& ground_truth,
                                  double iou_threshold) {
    auto grouped = group_detections(dets, ground_truth);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& label : ground_truth.class_set) {
        for (const auto& record : ground_truth.records) {
            std::vector<data::ObjectAnnotation> gts;
            for (const auto& a : record.annotations) {
                if (a.label == label) gts.push_back(a);
            }
            const MatchResult m = match_detections(grouped[label][record.image_id], gts, iou_threshold);
            tp += m.tp;
            fp += m.fp;
            fn += m.fn;
        }
    }
    return weak_label_report(tp, fp, fn);
}

nlohmann::json to_json(const WeakLabelReport& r) {
    return {{"tp", r.tp},
            {"fp", r.fp},
            {"fn", r.fn},
            {"accuracy", r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr)},
            {"accuracy_definition", "TP / (TP + FP + FN)"}};
}

EvalReport evaluate(const std::vector<Detection>& dets, const data::DatasetManifest& ground_truth,
                    const EvalOptions& options) {
    if (ground_truth.records.empty()) throw ValidationError("evaluate: the evaluated set is empty");
    auto grouped = group_detections(dets, ground_truth);
    EvalReport report;
    report.iou_threshold = options.iou_threshold;
    report.interpolation = options.interpolation;
    report.tag = options.tag;
    std::map<std::string, std::optional<double>> defined;
    for (const auto& label : ground_truth.class_set) {
        GroundTruthByImage gts;
        for (const auto& record : ground_truth.records) {
            auto& list = gts[record.image_id];
            for (const auto& a : record.annotations) {
                if (a.label == label) list.push_back(a);
            }
        }
        std::vector<Detection> class_dets;
        for (const auto& record : ground_truth.records) {
            const auto& per_image = grouped[label][record.image_id];
            class_dets.insert(class_dets.end(), per_image.begin(), per_image.end());
        }
        const ClassEvaluation ce = evaluate_class(class_dets, gts, options.iou_threshold, options.interpolation);
        report.classes[label] = {ce.ap, ce.gt, ce.tp, ce.fp, ce.fn};
        if (ce.ap) {
            defined[label] = ce.ap;
        } else {
            report.excluded_classes.push_back(label);
        }
    }
    if (defined.empty()) throw ValidationError("evaluate: no class has ground truth in the evaluated set");
    report.map = mean_ap(defined);
    return report;
}

}  // namespace thermoscope::eval
