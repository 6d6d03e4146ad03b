// Acceptance criteria C1..C10. `thermoscope_acceptance` runs all of them,
// `thermoscope_acceptance N` runs one. Each prints a single
// "C<n> PASS|FAIL: ..." line; the exit status is non-zero on any failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "support.hpp"
#include "thermoscope/data/manifest.hpp"
#include "thermoscope/data/synthetic.hpp"
#include "thermoscope/data/voc.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/detection/detector.hpp"
#include "thermoscope/eval/report.hpp"
#include "thermoscope/pipeline/pipelines.hpp"
#include "thermoscope/training/checkpoint.hpp"
#include "thermoscope/training/style_train.hpp"

using namespace thermoscope;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---- C1 -------------------------------------------------------------------

constexpr double kGramRelTol = 1e-6;

Outcome gram_oracle_check() {
    Rng rng(101);
    double worst = 0;
    int shapes = 0;
    for (int c = 1; c <= 8; ++c)
        for (int h = 1; h <= 8; ++h)
            for (int w = 1; w <= 8; ++w) {
                const Tensor f = tstest::random_tensor({c, h, w}, rng);
                const auto g = style::gram(style::FeatureMap{f, 1});
                const auto o = tstest::gram_oracle(f);
                for (int a = 0; a < c; ++a)
                    for (int b = 0; b < c; ++b) {
                        // Entries are judged against their Cauchy-Schwarz scale,
                        // so near-cancelling sums do not inflate the ratio.
                        const double scale = std::max(std::abs(o[a][b]), std::sqrt(o[a][a] * o[b][b]));
                        if (scale > 0) worst = std::max(worst, std::abs(g.values(a, b) - o[a][b]) / scale);
                    }
                ++shapes;
            }
    return {worst <= kGramRelTol, std::to_string(shapes) + " shapes, max relative error " + fmt("%.3g", worst) +
                                      " (tolerance " + fmt("%.0e", kGramRelTol) + ")"};
}

// ---- C2 -------------------------------------------------------------------

constexpr double kCoMatchTol = 1e-7;

Outcome comatch_identity_check() {
    Rng rng(202);
    double worst_identity = 0, worst_linear = 0;
    for (int i = 0; i < 50; ++i) {
        const int c = 1 + int(uniform_index(rng, 16));
        const int h = 1 + int(uniform_index(rng, 12));
        const int w = 1 + int(uniform_index(rng, 12));
        const style::FeatureMap f{tstest::random_tensor({c, h, w}, rng, -3, 3), 1};
        const style::Matrix eye = style::Matrix::Identity(c, c);
        const auto same = style::comatch(f, style::GramMatrix{eye, 1, 1.0}, style::CoMatchWeights{eye});
        for (std::size_t k = 0; k < f.values.size(); ++k)
            worst_identity = std::max(worst_identity, std::abs(same.values[k] - f.values[k]));

        const style::GramMatrix g{style::Matrix::Random(c, c), 1, 1.0};
        const style::Matrix W = style::Matrix::Random(c, c);
        const double alpha = -4 + 8 * uniform01(rng);
        const auto base = style::comatch(f, g, style::CoMatchWeights{W});
        const auto scaled = style::comatch(f, g, style::CoMatchWeights{alpha * W});
        for (std::size_t k = 0; k < f.values.size(); ++k)
            worst_linear = std::max(worst_linear, std::abs(scaled.values[k] - alpha * base.values[k]));
    }
    const bool ok = worst_identity <= kCoMatchTol && worst_linear <= kCoMatchTol;
    return {ok, "50 instances, identity error " + fmt("%.3g", worst_identity) + ", linearity error " +
                    fmt("%.3g", worst_linear) + " (tolerance " + fmt("%.0e", kCoMatchTol) + ")"};
}

// ---- C3 -------------------------------------------------------------------

constexpr double kGradRelTol = 1e-3;
// The loss network is piecewise linear (ReLU, max-pool); wider steps can
// straddle a kink and disagree with the one-sided truth.
constexpr double kStep = 1e-6;

Outcome gradient_check() {
    Rng rng(303);
    const auto network = style::LossNetwork::from_cache_or_random();
    const Image x = tstest::random_image(32, 32, rng);
    const tstest::ImageObjective obj{&network, network.extract(tstest::random_image(32, 32, rng)).content(),
                                     style::set_style_targets(tstest::random_image(32, 32, rng), network).grams};
    std::ostringstream detail;
    bool ok = true;
    for (auto t : {tstest::Term::content, tstest::Term::style, tstest::Term::tv}) {
        const auto r = tstest::check_image_term(obj, t, x, 24, rng, kStep, kGradRelTol);
        ok = ok && r.failed == 0;
        detail << tstest::term_name(t) << " " << fmt("%.2e", r.max_rel) << " (" << r.checked << " coords), ";
        if (r.failed) detail << "[" << r.worst << "] ";
    }
    style::Generator gen = style::Generator::create(style::GeneratorArch{}, 9);
    const Image content = tstest::random_image(32, 32, rng);
    const auto targets = style::set_style_targets(tstest::random_image(32, 32, rng), network, gen);
    const auto r = tstest::check_total_objective(gen, network, content, targets, style::LossWeights{}, 16, kStep,
                                                 kGradRelTol);
    ok = ok && r.failed == 0;
    detail << "total " << fmt("%.2e", r.max_rel) << " (" << r.checked << " params)";
    if (r.failed) detail << " [" << r.worst << "]";
    detail << "; tolerance " << fmt("%.0e", kGradRelTol) << " relative on 3x32x32";
    return {ok, detail.str()};
}

// ---- C4 -------------------------------------------------------------------

Outcome zero_loss_check() {
    Rng rng(404);
    const auto network = style::LossNetwork::from_cache_or_random();
    double worst = 0;
    for (int i = 0; i < 5; ++i) {
        const int side = 16 + 8 * i;
        const Image img = tstest::random_image(side, side, rng);
        const auto pyr = network.extract(img);
        worst = std::max(worst, style::content_loss(pyr.content(), pyr.content()));
        std::vector<style::GramMatrix> grams;
        for (const auto& m : pyr.maps) grams.push_back(style::gram(m));
        worst = std::max(worst, style::style_loss(pyr, grams));
        Image flat = img;
        for (auto& v : flat.values()) v = 0.37 * i;
        worst = std::max(worst, style::tv_loss(flat));
    }
    return {worst == 0.0, "largest of content/style/tv losses at the zero points: " + fmt("%.3g", worst)};
}

// ---- C5 -------------------------------------------------------------------

constexpr double kTableTol = 5e-5;

struct TableRow {
    const char* table;
    const char* row;
    double car, bicycle, person, printed;
};

Outcome table_parity_check() {
    // Per-class AP and the printed average, FLIR columns of the baseline and
    // style-consistency result tables.
    const std::vector<TableRow> rows{
        {"baseline", "Faster-RCNN ResNet-101", 0.6799, 0.4276, 0.548, 0.5518},
        {"baseline", "SSD-300 VGG-16", 0.7561, 0.4502, 0.6197, 0.6087},
        {"baseline", "SSD-300 MobileNet-v2", 0.4774, 0.1943, 0.3163, 0.3284},
        {"baseline", "SSD-300 EfficientNet", 0.6809, 0.2747, 0.4992, 0.4849},
        {"baseline", "SSD-512 VGG-16", 0.8055, 0.5399, 0.702, 0.6825},
        {"odsc", "Faster-RCNN ResNet-101", 0.7190, 0.4394, 0.6201, 0.5928},
        {"odsc", "SSD-300 VGG-16", 0.7991, 0.4691, 0.6253, 0.6312},
        {"odsc", "SSD-300 MobileNet-v2", 0.5434, 0.2798, 0.3638, 0.3957},
        {"odsc", "SSD-300 EfficientNet", 0.7405, 0.3512, 0.5169, 0.5362},
        {"odsc", "SSD-512 VGG-16", 0.8233, 0.5553, 0.7101, 0.6962},
    };
    std::vector<std::string> off;
    double worst = 0;
    for (const auto& r : rows) {
        const double m = eval::mean_ap(std::map<std::string, double>{
            {"car", r.car}, {"bicycle", r.bicycle}, {"person", r.person}});
        const double d = std::abs(m - r.printed);
        worst = std::max(worst, d);
        if (d > kTableTol) {
            off.push_back(std::string(r.table) + " / " + r.row + ": mean " + fmt("%.5f", m) + " vs printed " +
                          fmt("%.4f", r.printed));
        }
    }
    std::string detail = std::to_string(rows.size() - off.size()) + "/" + std::to_string(rows.size()) +
                         " rows within " + fmt("%.0e", kTableTol);
    for (const auto& o : off) detail += "; " + o;
    return {off.empty(), detail};
}

// ---- C6 -------------------------------------------------------------------

// Tolerance for "exact": both sides sum the same rational terms in a
// different order, so agreement is to the last few ulps, not bitwise.
constexpr double kOracleTol = 1e-12;

std::vector<data::BoundingBox> grid_boxes() {
    std::vector<data::BoundingBox> out;
    for (int x1 = 0; x1 < 4; ++x1)
        for (int x2 = x1 + 1; x2 <= 4; ++x2)
            for (int y1 = 0; y1 < 4; ++y1)
                for (int y2 = y1 + 1; y2 <= 4; ++y2) out.push_back({double(x1), double(y1), double(x2), double(y2)});
    return out;
}

struct OracleTally {
    long instances = 0;
    long mismatches = 0;
    double worst = 0;
    std::string example;

    void check(const std::vector<detection::Detection>& dets, const eval::GroundTruthByImage& gts) {
        ++instances;
        const auto got = eval::average_precision(dets, gts);
        const auto want = tstest::ap_oracle(dets, gts);
        const double d = (got.has_value() != want.has_value()) ? 1.0 : got ? std::abs(*got - *want) : 0.0;
        worst = std::max(worst, d);
        if (d > kOracleTol) {
            if (mismatches++ == 0) example = "first mismatch at instance " + std::to_string(instances);
        }
    }
};

Outcome voc_oracle_check() {
    const auto boxes = grid_boxes();
    OracleTally tally;
    // Exhaustive: one image, one GT, up to two ranked detections.
    for (const auto& g : boxes) {
        const eval::GroundTruthByImage gts{{"a", {{g, "car", false}}}};
        for (const auto& d1 : boxes) {
            tally.check({{"a", d1, "car", 0.9}}, gts);
            for (const auto& d2 : boxes) tally.check({{"a", d1, "car", 0.9}, {"a", d2, "car", 0.8}}, gts);
        }
    }
    // Exhaustive: two GTs (one possibly difficult), one detection.
    for (const auto& g1 : boxes)
        for (const auto& g2 : boxes)
            for (bool diff : {false, true}) {
                const eval::GroundTruthByImage gts{{"a", {{g1, "car", false}, {g2, "car", diff}}}};
                for (const auto& d : boxes) tally.check({{"a", d, "car", 0.5}}, gts);
            }
    // Random: up to 5 detections and 3 GTs per image over 1..3 images,
    // tied confidences and difficult flags included.
    Rng rng(606);
    for (int i = 0; i < 300000; ++i) {
        const int images = 1 + int(uniform_index(rng, 3));
        std::vector<detection::Detection> dets;
        eval::GroundTruthByImage gts;
        for (int im = 0; im < images; ++im) {
            const std::string id = "im" + std::to_string(im);
            auto& list = gts[id];
            for (int g = int(uniform_index(rng, 4)); g > 0; --g)
                list.push_back({boxes[uniform_index(rng, boxes.size())], "car", uniform01(rng) < 0.15});
            for (int d = int(uniform_index(rng, 6)); d > 0; --d)
                dets.push_back({id, boxes[uniform_index(rng, boxes.size())], "car",
                                double(1 + uniform_index(rng, 6)) / 6.0});
        }
        tally.check(dets, gts);
    }
    std::string detail = std::to_string(tally.instances) + " instances on the 4x4 grid, max |AP - oracle| " +
                         fmt("%.3g", tally.worst) + " (tolerance " + fmt("%.0e", kOracleTol) + ")";
    if (tally.mismatches) detail += "; " + std::to_string(tally.mismatches) + " mismatches, " + tally.example;
    return {tally.mismatches == 0, detail};
}

// ---- C7 -------------------------------------------------------------------

Outcome smoke_convergence_check() {
    Rng rng(707);
    const auto network = style::LossNetwork::from_cache_or_random();
    const std::vector<Image> content{tstest::random_image(64, 64, rng)};
    const std::vector<Image> style_img{tstest::random_image(64, 64, rng)};
    training::StyleTrainConfig c;
    c.epochs = 200;
    c.batch_size = 1;
    c.style_sizes = {64};
    c.content_size = 64;
    c.seed = 7;
    const auto a = training::train_msgnet_images(c, content, style_img, network);
    const auto b = training::train_msgnet_images(c, content, style_img, network);
    const auto& log = a.log.entries;
    if (log.size() != 200) return {false, "expected 200 iterations, logged " + std::to_string(log.size())};
    const double first = log.front().total, last = log.back().total;

    bool identical = a.log.entries.size() == b.log.entries.size();
    for (std::size_t i = 0; identical && i < log.size(); ++i) identical = log[i].total == b.log.entries[i].total;
    const auto& pa = a.checkpoint.generator.parameters();
    const auto& pb = b.checkpoint.generator.parameters();
    for (std::size_t i = 0; identical && i < pa.size(); ++i) identical = pa[i].value == pb[i].value;

    const double ratio = last / first;
    return {ratio < 0.5 && identical, "total " + fmt("%.4g", first) + " -> " + fmt("%.4g", last) + " (ratio " +
                                          fmt("%.3f", ratio) + ", need < 0.5); rerun " +
                                          (identical ? "bitwise identical" : "DIFFERS")};
}

// ---- C8, C9 ---------------------------------------------------------------

data::ToyCorpus toy_corpus(const fs::path& dir, std::vector<std::string> classes = data::flir_classes()) {
    data::ToyCorpusOptions o;
    o.frames = 13;
    o.train_fraction = 0.77;
    o.seed = 8;
    o.classes = std::move(classes);
    return data::write_toy_corpus(dir, o);
}

void check_report(const eval::EvalReport& r, const std::vector<std::string>& class_set, std::vector<std::string>& bad) {
    std::vector<double> aps;
    for (const auto& name : class_set) {
        const auto it = r.classes.find(name);
        if (it == r.classes.end()) {
            bad.push_back("class " + name + " missing from report");
            continue;
        }
        const auto& c = it->second;
        if (c.fn != c.gt - c.tp) bad.push_back("counts inconsistent for " + name);
        if (c.ap) {
            if (*c.ap < 0 || *c.ap > 1) bad.push_back("AP out of range for " + name);
            aps.push_back(*c.ap);
        }
    }
    if (aps.empty()) {
        bad.push_back("no class has a defined AP");
        return;
    }
    double mean = 0;
    for (double v : aps) mean += v / double(aps.size());
    if (std::abs(mean - r.map) > 1e-12) bad.push_back("map is not the mean of the class APs");
}

Outcome odsc_pipeline_check() {
    tstest::TempDir dir("accept_odsc");
    const auto corpus = toy_corpus(dir / "toy");
    const json j = {{"pipeline", "odsc"},
                    {"seed", 3},
                    {"datasets", {{"train", "toy/thermal.json"}, {"style", "toy/visible.json"}}},
                    {"detector", {{"architecture", "reference-mini"}, {"backbone", "mini"}}},
                    {"style",
                     {{"train", {{"epochs", 2}, {"batch_size", 4}, {"style_sizes", {64, 96}}, {"content_size", 96}}},
                      {"stylize_size", 96}}},
                    {"output_dir", "out"}};
    const auto config = pipeline::PipelineConfig::from_json(j, dir.path());
    const auto records = pipeline::run_pipeline(config);
    std::vector<std::string> bad;
    const auto& rec = records.at(0);
    rec.check_artifacts();
    if (!rec.report) return {false, "no report"};
    check_report(*rec.report, corpus.thermal.class_set, bad);
    if (!(eval::load_report(rec.artifacts.at("report")) == *rec.report)) bad.push_back("report.json differs");

    // Annotation invariance.
    const auto train = corpus.thermal.subset(data::SplitRole::train);
    const auto val = corpus.thermal.subset(data::SplitRole::val);
    const auto styled = data::load_manifest(rec.artifacts.at("styled_train_manifest"));
    data::validate(styled);
    if (styled.records.size() != train.records.size()) bad.push_back("styled set size differs");
    for (const auto& r : styled.records) {
        const auto* src = train.find(r.image_id);
        if (!src) {
            bad.push_back("styled record " + r.image_id + " has no source");
            continue;
        }
        if (r.annotations != src->annotations || r.width != src->width || r.height != src->height)
            bad.push_back("annotations changed for " + r.image_id);
        if (r.pair_key != src->pair_key) bad.push_back("pair key changed for " + r.image_id);
    }
    // Split hygiene: scored frames are exactly the untouched validation frames.
    std::set<std::string> scored(rec.eval_frames.begin(), rec.eval_frames.end()), expected;
    for (const auto& r : val.records) expected.insert(r.pair_key.empty() ? r.image_id : r.pair_key);
    if (scored != expected) bad.push_back("evaluated frames are not the validation split");
    std::vector<const data::LabeledImage*> inputs, evaluated;
    for (const auto& r : styled.records) inputs.push_back(&r);
    for (const auto& r : train.records) inputs.push_back(&r);
    for (const auto& r : corpus.visible.records)
        if (corpus.visible.split.at(r.image_id) == data::SplitRole::train) inputs.push_back(&r);
    for (const auto& r : val.records) evaluated.push_back(&r);
    try {
        pipeline::check_disjoint(inputs, evaluated);
    } catch (const ValidationError& e) {
        bad.push_back(e.what());
    }
    std::string detail = "mAP " + fmt("%.4f", rec.report->map) + " on " + std::to_string(scored.size()) +
                         " val frames after training on " + std::to_string(styled.records.size()) + " styled frames";
    for (const auto& b : bad) detail += "; " + b;
    return {bad.empty(), detail};
}

Outcome cdmt_direction_check() {
    tstest::TempDir dir("accept_cdmt");
    toy_corpus(dir / "toy");
    const json j = {{"pipeline", "cdmt"},
                    {"seed", 1},
                    {"datasets", {{"paired", "toy/paired.json"}}},
                    {"detector", {{"architecture", "reference-mini"}, {"backbone", "mini"}, {"class_set", {"person"}}}},
                    {"style",
                     {{"train", {{"epochs", 6}, {"batch_size", 4}, {"style_sizes", {96}}, {"content_size", 96}}},
                      {"stylize_size", 96}}},
                    {"output_dir", "out"}};
    const auto records = pipeline::run_pipeline(pipeline::PipelineConfig::from_json(j, dir.path()));
    const auto& without = records.at(0);
    const auto& with = records.at(1);
    if (!without.report || !with.report) return {false, "missing report"};
    if (without.eval_frames != with.eval_frames) return {false, "the two reports score different frames"};
    const auto a = without.report->classes.at("person").ap;
    const auto b = with.report->classes.at("person").ap;
    if (!a || !b) return {false, "person AP undefined"};
    return {*b >= *a, "person AP without style " + fmt("%.4f", *a) + ", with style " + fmt("%.4f", *b)};
}

// ---- C10 ------------------------------------------------------------------

Outcome round_trip_check() {
    tstest::TempDir dir("accept_formats");
    Rng rng(1010);
    int voc = 0, bad = 0;
    std::string first_bad;
    data::DatasetManifest m;
    m.name = "round trip";
    m.class_set = data::flir_classes();
    for (int i = 0; i < 300; ++i) {
        data::LabeledImage r;
        r.image_id = "img_" + std::to_string(i) + (i % 7 == 0 ? "&<odd>" : "");
        r.path = "images/" + r.image_id + ".png";
        r.width = 20 + int(uniform_index(rng, 600));
        r.height = 20 + int(uniform_index(rng, 600));
        r.spectrum = i % 2 ? data::Spectrum::visible : data::Spectrum::thermal;
        for (int k = int(uniform_index(rng, 5)); k > 0; --k) {
            const int x1 = int(uniform_index(rng, r.width - 1)), y1 = int(uniform_index(rng, r.height - 1));
            const int x2 = x1 + 1 + int(uniform_index(rng, r.width - x1 - 1));
            const int y2 = y1 + 1 + int(uniform_index(rng, r.height - y1 - 1));
            r.annotations.push_back({{double(x1), double(y1), double(x2), double(y2)},
                                     m.class_set[uniform_index(rng, 3)], uniform01(rng) < 0.2});
        }
        const auto back = data::from_voc_xml(data::to_voc_xml(r));
        if (back.image_id != r.image_id || back.width != r.width || back.height != r.height ||
            back.annotations != r.annotations) {
            if (bad++ == 0) first_bad = r.image_id;
        }
        ++voc;
        r.pair_key = i % 3 ? "" : "frame" + std::to_string(i);
        m.records.push_back(r);
        m.split[r.image_id] = i % 5 ? data::SplitRole::train : data::SplitRole::val;
    }
    std::vector<std::string> problems;
    if (bad) problems.push_back(std::to_string(bad) + " VOC mismatches, first " + first_bad);
    if (!(data::manifest_from_json(data::to_json(m)) == m)) problems.push_back("manifest JSON value differs");
    data::save_manifest(dir / "m.json", m);
    if (!(data::load_manifest(dir / "m.json") == m)) problems.push_back("manifest file differs");
    if (!data::to_json(m).contains("schema_version")) problems.push_back("manifest lacks schema_version");

    // Weak-label output from the pipeline, re-read with the VOC parser.
    data::ToyCorpusOptions o;
    o.frames = 5;
    o.width = o.height = 48;
    o.seed = 10;
    const auto corpus = data::write_toy_corpus(dir / "toy", o);
    auto spec = detection::paper_defaults(detection::Architecture::reference_mini, detection::Backbone::mini);
    spec.class_set = corpus.thermal.class_set;
    spec.epochs = 1;
    spec.input_size = 48;
    detection::train_detector(*detection::register_detector(spec), corpus.thermal, spec)->save(dir / "det.tsck");
    style::GeneratorArch arch;
    arch.channels = 4;
    arch.residual_blocks = 1;
    training::Checkpoint{style::Generator::create(arch, 1), json::object(), 0, {}}.save(dir / "style.tsck");
    fs::create_directories(dir / "unlabeled");
    for (const auto& r : corpus.thermal.records) fs::copy_file(r.path, dir / "unlabeled" / fs::path(r.path).filename());
    const json j = {{"pipeline", "weak-label"},
                    {"datasets", {{"unlabeled_dir", "unlabeled"}}},
                    {"detector_handle", "det.tsck"},
                    {"style", {{"checkpoint", "style.tsck"}, {"stylize_size", 48}}},
                    {"weak_label", {{"score_threshold", 0.01}, {"style_reference", corpus.visible.records[0].path}}},
                    {"output_dir", "weak"}};
    const auto rec = pipeline::run_pipeline(pipeline::PipelineConfig::from_json(j, dir.path())).at(0);
    int xml = 0, boxes = 0;
    for (const auto& entry : fs::directory_iterator(rec.artifacts.at("pseudo_labels"))) {
        std::ifstream in(entry.path());
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            const auto r = data::from_voc_xml(ss.str());
            data::validate(r, &spec.class_set);
            boxes += int(r.annotations.size());
            ++xml;
        } catch (const Error& e) {
            problems.push_back(entry.path().filename().string() + ": " + e.what());
        }
    }
    if (xml != 5) problems.push_back("expected 5 weak-label files, parsed " + std::to_string(xml));
    std::string detail = std::to_string(voc) + " VOC records, manifest of " + std::to_string(m.records.size()) +
                         " records, " + std::to_string(xml) + " weak-label files (" + std::to_string(boxes) +
                         " boxes) re-parsed";
    for (const auto& p : problems) detail += "; " + p;
    return {problems.empty(), detail};
}

struct Criterion {
    int id;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, 30, gram_oracle_check},          {2, 10, comatch_identity_check}, {3, 120, gradient_check},
        {4, 10, zero_loss_check},            {5, 1, table_parity_check},      {6, 60, voc_oracle_check},
        {7, 300, smoke_convergence_check},   {8, 600, odsc_pipeline_check},   {9, 600, cdmt_direction_check},
        {10, 10, round_trip_check},
    };
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > int(criteria.size())) {
            std::cerr << "usage: thermoscope_acceptance [1-10]\n";
            return 2;
        }
    }
    int failures = 0;
    for (const auto& c : criteria) {
        if (only && c.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string timing = fmt("%.1fs", secs) + " of " + fmt("%.0fs", c.budget_seconds);
        if (secs > c.budget_seconds) {
            o.pass = false;
            timing += ", OVER BUDGET";
        }
        std::cout << "C" << c.id << (o.pass ? " PASS: " : " FAIL: ") << o.detail << " [" << timing << "]"
                  << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures ? 1 : 0;
}
