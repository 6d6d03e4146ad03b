#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/eval/report.hpp"
#include "thermoscope/eval/voc_eval.hpp"

using namespace thermoscope;
using namespace thermoscope::eval;
using tstest::ann;
using tstest::det;

namespace {

// Random instance over a few images, boxes on a coarse grid so ties in IoU
// and exact overlaps are frequent. Confidences are distinct.
struct Instance {
    std::vector<Detection> dets;
    GroundTruthByImage gts;
};

Instance random_instance(Rng& rng, int images, int max_dets, int max_gts, int grid, bool difficult) {
    auto box = [&] {
        const int x1 = int(uniform_index(rng, grid - 1)), y1 = int(uniform_index(rng, grid - 1));
        const int x2 = x1 + 1 + int(uniform_index(rng, grid - 1 - x1));
        const int y2 = y1 + 1 + int(uniform_index(rng, grid - 1 - y1));
        return data::BoundingBox{double(x1), double(y1), double(x2), double(y2)};
    };
    Instance in;
    std::vector<double> confs;
    for (int i = 0; i < images; ++i) {
        const std::string id = "im" + std::to_string(i);
        const int ng = int(uniform_index(rng, max_gts + 1));
        for (int g = 0; g < ng; ++g) in.gts[id].push_back({box(), "car", difficult && uniform01(rng) < 0.25});
        const int nd = int(uniform_index(rng, max_dets + 1));
        for (int d = 0; d < nd; ++d) in.dets.push_back({id, box(), "car", 0.0});
    }
    for (std::size_t i = 0; i < in.dets.size(); ++i) confs.push_back((i + 1.0) / (in.dets.size() + 1.0));
    shuffle(confs, rng);
    for (std::size_t i = 0; i < in.dets.size(); ++i) in.dets[i].confidence = confs[i];
    return in;
}

std::size_t total_tp(const Instance& in, double thr) { return evaluate_class(in.dets, in.gts, thr).tp; }

}  // namespace

TEST_CASE("iou examples") {
    CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
    CHECK(iou({0, 0, 10, 10}, {20, 20, 30, 30}) == 0.0);
    CHECK(iou({0, 0, 10, 10}, {10, 0, 20, 10}) == 0.0);
    CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        const auto a = random_instance(rng, 1, 2, 0, 9, false).dets;
        if (a.size() < 2) continue;
        const double v = iou(a[0].box, a[1].box);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v == doctest::Approx(tstest::iou_oracle(a[0].box, a[1].box)).epsilon(1e-14));
        CHECK(v == iou(a[1].box, a[0].box));
    }
}

TEST_CASE("greedy matching examples") {
    const auto one = match_detections({det("a", "car", 0.9, 0, 0, 10, 10)}, {ann("car", 0, 0, 10, 10)});
    CHECK(one.tp == 1);
    CHECK(one.fp == 0);
    CHECK(one.fn == 0);

    const auto two = match_detections({det("a", "car", 0.6, 0, 0, 10, 10), det("a", "car", 0.9, 0, 0, 10, 11)},
                                      {ann("car", 0, 0, 10, 10)});
    CHECK(two.order == std::vector<std::size_t>{1, 0});
    CHECK(two.flags == std::vector<MatchFlag>{MatchFlag::tp, MatchFlag::fp});
    CHECK(two.gt_matched == std::vector<bool>{true});

    const auto none = match_detections({}, {ann("car", 0, 0, 1, 1), ann("car", 2, 2, 3, 3)});
    CHECK(none.fn == 2);
    CHECK(none.tp == 0);

    // Highest-IoU unmatched box wins, even when a better box is already taken.
    const auto shift = match_detections(
        {det("a", "car", 0.9, 0, 0, 10, 10), det("a", "car", 0.8, 0, 0, 10, 10)},
        {ann("car", 0, 0, 10, 10), ann("car", 0, 0, 10, 12)});
    CHECK(shift.tp == 2);

    // A difficult box absorbs detections without credit or penalty.
    const auto diff = match_detections({det("a", "car", 0.9, 0, 0, 10, 10), det("a", "car", 0.8, 0, 0, 10, 10)},
                                       {ann("car", 0, 0, 10, 10, true)});
    CHECK(diff.flags == std::vector<MatchFlag>{MatchFlag::ignored, MatchFlag::ignored});
    CHECK(diff.fn == 0);
    CHECK(diff.fp == 0);

    CHECK_THROWS_AS(match_detections({det("a", "car", 0.9, 0, 0, 1, 1), det("a", "person", 0.8, 0, 0, 1, 1)}, {}),
                    ValidationError);
    CHECK_THROWS_AS(match_detections({det("a", "car", 0.9, 0, 0, 1, 1), det("b", "car", 0.8, 0, 0, 1, 1)}, {}),
                    ValidationError);
}

TEST_CASE("average precision examples") {
    const GroundTruthByImage gts{{"a", {ann("car", 0, 0, 10, 10), ann("car", 20, 20, 30, 30)}}};
    const std::vector<Detection> dets{det("a", "car", 0.9, 0, 0, 10, 10), det("a", "car", 0.8, 50, 50, 60, 60),
                                      det("a", "car", 0.7, 20, 20, 30, 30)};
    CHECK(*average_precision(dets, gts) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));

    const std::vector<Detection> perfect{det("a", "car", 0.9, 0, 0, 10, 10), det("a", "car", 0.7, 20, 20, 30, 30)};
    CHECK(*average_precision(perfect, gts) == 1.0);
    CHECK(*average_precision({det("a", "car", 0.9, 40, 40, 50, 50)}, gts) == 0.0);
    CHECK(*average_precision({}, gts) == 0.0);

    const auto absent = average_precision(dets, GroundTruthByImage{{"a", {}}});
    CHECK_FALSE(absent.has_value());
    CHECK_FALSE(average_precision(dets, {{"a", {ann("car", 0, 0, 10, 10, true)}}}).has_value());

    // 11-point on the same curve: recall 0.5 at precision 1, 1.0 at 2/3.
    CHECK(*average_precision(dets, gts, 0.5, Interpolation::voc2007_11pt) ==
          doctest::Approx((6 * 1.0 + 5 * (2.0 / 3.0)) / 11.0));

    CHECK_THROWS_AS(average_precision(dets, gts, 0.0), ConfigError);
    CHECK_THROWS_AS(average_precision({det("a", "person", 0.9, 0, 0, 1, 1)}, gts), ValidationError);
    CHECK(parse_interpolation("voc2007-11pt") == Interpolation::voc2007_11pt);
    CHECK_THROWS_AS(parse_interpolation("coco"), ConfigError);
}

TEST_CASE("mean AP reproduces published aggregates") {
    CHECK(std::abs(mean_ap(std::map<std::string, double>{{"car", 0.7190}, {"bicycle", 0.4394}, {"person", 0.6201}}) -
                   0.5928) <= 5e-5);
    CHECK(std::abs(mean_ap(std::map<std::string, double>{{"car", 0.8055}, {"bicycle", 0.5399}, {"person", 0.7020}}) -
                   0.6825) <= 5e-5);
    CHECK(mean_ap(std::map<std::string, double>{{"person", 0.7725}}) == 0.7725);

    std::map<std::string, std::optional<double>> with_absent{{"car", 0.5}, {"person", std::nullopt}};
    try {
        mean_ap(with_absent);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("person") != std::string::npos);
    }
    CHECK_THROWS_AS(mean_ap(std::map<std::string, double>{}), ValidationError);

    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        std::map<std::string, double> m, scaled;
        const double alpha = uniform01(rng);
        for (int c = 0; c < 1 + int(uniform_index(rng, 5)); ++c) {
            m["c" + std::to_string(c)] = uniform01(rng);
            scaled["c" + std::to_string(c)] = alpha * m["c" + std::to_string(c)];
        }
        CHECK(mean_ap(scaled) == doctest::Approx(alpha * mean_ap(m)).epsilon(1e-14));
    }
}

TEST_CASE("weak label accounting") {
    CHECK(*weak_label_report(2, 1, 1).accuracy == 0.5);
    CHECK(*weak_label_report(4, 0, 0).accuracy == 1.0);
    CHECK(*weak_label_report(0, 0, 3).accuracy == 0.0);
    CHECK_FALSE(weak_label_report(0, 0, 0).accuracy.has_value());

    data::DatasetManifest m;
    m.name = "gt";
    m.class_set = {"car", "person"};
    m.records.push_back({"a", "a.png", 50, 50, data::Spectrum::thermal,
                         {ann("car", 0, 0, 10, 10), ann("person", 20, 20, 30, 40)}, ""});
    m.records.push_back({"b", "b.png", 50, 50, data::Spectrum::thermal, {ann("person", 0, 0, 5, 5)}, ""});
    const auto r = weak_label_report({det("a", "car", 0.9, 0, 0, 10, 10), det("a", "person", 0.8, 0, 0, 10, 10),
                                      det("b", "person", 0.7, 0, 0, 5, 5)},
                                     m);
    CHECK(r.tp == 2);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(*r.accuracy == 0.5);
    CHECK(to_json(r).at("accuracy") == 0.5);
    CHECK_THROWS_AS(weak_label_report({det("zzz", "car", 0.9, 0, 0, 1, 1)}, m), ValidationError);
}

TEST_CASE("evaluator properties on random instances") {
    Rng rng(11);
    for (int trial = 0; trial < 400; ++trial) {
        const Instance in = random_instance(rng, 1 + int(uniform_index(rng, 3)), 6, 4, 6, trial % 2 == 0);
        const auto base = evaluate_class(in.dets, in.gts);
        CAPTURE(trial);

        // Shuffled input yields the same AP.
        auto shuffled = in.dets;
        shuffle(shuffled, rng);
        CHECK(evaluate_class(shuffled, in.gts).ap == base.ap);

        for (std::size_t k = 1; k < base.curve.size(); ++k) CHECK(base.curve[k].recall >= base.curve[k - 1].recall);
        for (const auto& p : base.curve) {
            CHECK(p.recall >= 0);
            CHECK(p.recall <= 1);
            CHECK(p.precision >= 0);
            CHECK(p.precision <= 1);
        }
        CHECK(base.fn == base.gt - base.tp);

        std::size_t prev = total_tp(in, 0.05);
        for (double thr : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
            const std::size_t tp = total_tp(in, thr);
            CHECK(tp <= prev);
            prev = tp;
        }

        const auto oracle = tstest::ap_oracle(in.dets, in.gts);
        REQUIRE(oracle.has_value() == base.ap.has_value());
        if (oracle) CHECK(std::abs(*oracle - *base.ap) <= 1e-12);
    }
}

TEST_CASE("per-image match counts agree with the dataset evaluation") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Instance in = random_instance(rng, 3, 5, 3, 5, true);
        std::size_t tp = 0, fp = 0, matched = 0;
        for (const auto& [id, list] : in.gts) {
            std::vector<Detection> local;
            for (const auto& d : in.dets)
                if (d.image_id == id) local.push_back(d);
            const auto m = match_detections(local, list);
            tp += m.tp;
            fp += m.fp;
            for (std::size_t g = 0; g < list.size(); ++g) matched += (m.gt_matched[g] && !list[g].difficult);
            CHECK(m.tp == std::size_t(std::count(m.gt_matched.begin(), m.gt_matched.end(), true)));
        }
        const auto all = evaluate_class(in.dets, in.gts);
        CHECK(all.tp == tp);
        CHECK(matched == tp);
    }
}

TEST_CASE("dataset evaluation and report format") {
    tstest::TempDir dir("report");
    data::DatasetManifest m;
    m.name = "gt";
    m.class_set = {"car", "bicycle", "person"};
    m.records.push_back({"a", "a.png", 50, 50, data::Spectrum::thermal,
                         {ann("car", 0, 0, 10, 10), ann("person", 20, 20, 30, 40)}, ""});
    m.split["a"] = data::SplitRole::val;
    const std::vector<Detection> dets{det("a", "car", 0.9, 0, 0, 10, 10), det("a", "person", 0.4, 0, 0, 5, 5)};
    const EvalReport r = evaluate(dets, m, {0.5, Interpolation::all_point, "toy"});
    CHECK(r.classes.at("car").ap == 1.0);
    CHECK(r.classes.at("person").ap == 0.0);
    CHECK(r.excluded_classes == std::vector<std::string>{"bicycle"});
    CHECK(r.map == 0.5);
    CHECK(r.classes.at("person").fn == 1);

    save_report(dir / "r.json", r);
    CHECK(load_report(dir / "r.json") == r);
    const auto j = to_json(r);
    for (const char* key : {"classes", "map", "iou_threshold", "interpolation"}) CHECK(j.contains(key));
    CHECK(j.at("interpolation") == "all-point");

    const std::string table = format_table({{"reference-mini", r}, {"other", r}});
    CHECK(table.find("Average mAP") != std::string::npos);
    CHECK(table.find("0.5000") != std::string::npos);
    CHECK(table.find("IoU 0.5") != std::string::npos);

    std::ofstream(dir / "junk.json") << "{";
    CHECK_THROWS_AS(load_report(dir / "junk.json"), ParseError);
}
