#include "thermoscope/pipeline/config.hpp"

#include <fstream>
#include <set>

#include "thermoscope/error.hpp"

namespace thermoscope::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(PipelineKind k) {
    switch (k) {
        case PipelineKind::baseline: return "baseline";
        case PipelineKind::odsc: return "odsc";
        case PipelineKind::sanity_swap: return "sanity-swap";
        case PipelineKind::cdmt: return "cdmt";
        case PipelineKind::weak_label: return "weak-label";
        case PipelineKind::bench: return "bench";
        case PipelineKind::style_train: return "style-train";
        case PipelineKind::stylize: return "stylize";
        case PipelineKind::eval: return "eval";
    }
    return "?";
}

PipelineKind parse_pipeline(const std::string& s) {
    for (auto k : {PipelineKind::baseline, PipelineKind::odsc, PipelineKind::sanity_swap, PipelineKind::cdmt,
                   PipelineKind::weak_label, PipelineKind::bench, PipelineKind::style_train, PipelineKind::stylize,
                   PipelineKind::eval}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown pipeline '" + s + "'");
}

namespace {

class Reader {
public:
    Reader(const json& j, std::string where, std::set<std::string> allowed) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(where_ + " must be an object");
        for (const auto& [key, _] : j.items()) {
            if (!allowed.contains(key)) throw ConfigError("unknown key '" + path(key) + "'");
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const json& at(const char* key) const { return j_.at(key); }
    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    template <class T>
    void get(const char* key, T& out) const {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("'" + path(key) + "' has the wrong type");
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) const {
        if (!has(key)) return;
        T v;
        get(key, v);
        out = std::move(v);
    }

private:
    const json& j_;
    std::string where_;
};

std::optional<fs::path> resolve(const std::optional<std::string>& p, const fs::path& base) {
    if (!p) return std::nullopt;
    if (p->empty()) throw ConfigError("empty path in config");
    fs::path out(*p);
    return out.is_absolute() || base.empty() ? out : base / out;
}

json opt_path(const std::optional<fs::path>& p) {
    return p ? json(fs::absolute(*p).lexically_normal().string()) : json(nullptr);
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
    const Reader top(j, "", {"pipeline", "seed", "deterministic", "output_dir", "datasets", "detector",
                             "detector_handle", "style", "evaluation", "weak_label", "bench"});
    PipelineConfig c;
    if (!top.has("pipeline")) throw ConfigError("config is missing 'pipeline'");
    std::string name;
    top.get("pipeline", name);
    c.pipeline = parse_pipeline(name);
    top.get("seed", c.seed);
    top.get("deterministic", c.deterministic);
    std::optional<std::string> s;
    top.get("output_dir", s);
    if (s) c.output_dir = *resolve(s, base_dir);

    if (top.has("datasets")) {
        const Reader r(top.at("datasets"), "datasets",
                       {"train", "eval", "content", "style", "paired", "unlabeled_dir", "probe"});
        auto path = [&](const char* key) {
            std::optional<std::string> v;
            r.get(key, v);
            return resolve(v, base_dir);
        };
        c.datasets.train = path("train");
        c.datasets.eval = path("eval");
        c.datasets.content = path("content");
        c.datasets.style = path("style");
        c.datasets.paired = path("paired");
        c.datasets.unlabeled_dir = path("unlabeled_dir");
        c.datasets.probe = path("probe");
    }

    if (top.has("detector")) {
        const Reader r(top.at("detector"), "detector",
                       {"architecture", "backbone", "learning_rate", "epochs", "batch_size", "input_size",
                        "class_set", "seed", "protocol", "external_command", "work_dir"});
        DetectorSection d;
        if (!r.has("architecture") || !r.has("backbone")) {
            throw ConfigError("detector needs 'architecture' and 'backbone'");
        }
        std::string v;
        r.get("architecture", v);
        d.architecture = detection::parse_architecture(v);
        r.get("backbone", v);
        d.backbone = detection::parse_backbone(v);
        if (!detection::is_registered(d.architecture, d.backbone)) {
            detection::DetectorSpec probe;
            probe.architecture = d.architecture;
            probe.backbone = d.backbone;
            probe.validate();  // throws with the list of valid pairs
        }
        r.get("learning_rate", d.learning_rate);
        r.get("epochs", d.epochs);
        r.get("batch_size", d.batch_size);
        r.get("input_size", d.input_size);
        r.get("class_set", d.class_set);
        r.get("seed", d.seed);
        std::optional<std::string> protocol;
        r.get("protocol", protocol);
        if (protocol) d.protocol = detection::parse_protocol(*protocol);
        r.get("external_command", d.external.command);
        std::optional<std::string> work;
        r.get("work_dir", work);
        if (work) d.external.work_dir = *resolve(work, base_dir);
        c.detector = std::move(d);
    }
    std::optional<std::string> handle;
    top.get("detector_handle", handle);
    c.detector_handle = resolve(handle, base_dir);

    if (top.has("style")) {
        const Reader r(top.at("style"), "style", {"checkpoint", "train", "stylize_size", "workers"});
        std::optional<std::string> ck;
        r.get("checkpoint", ck);
        c.style.checkpoint = resolve(ck, base_dir);
        if (r.has("train")) {
            if (!r.at("train").is_object()) throw ConfigError("'style.train' must be an object");
            c.style.train = r.at("train");
        }
        r.get("stylize_size", c.style.stylize_size);
        r.get("workers", c.style.workers);
        if (c.style.stylize_size < 0) throw ConfigError("'style.stylize_size' must be >= 0");
        if (c.style.workers < 1) throw ConfigError("'style.workers' must be >= 1");
    }

    if (top.has("evaluation")) {
        const Reader r(top.at("evaluation"), "evaluation",
                       {"iou_threshold", "interpolation", "score_threshold", "detections"});
        r.get("iou_threshold", c.evaluation.iou_threshold);
        std::optional<std::string> mode;
        r.get("interpolation", mode);
        if (mode) c.evaluation.interpolation = eval::parse_interpolation(*mode);
        r.get("score_threshold", c.evaluation.score_threshold);
        std::optional<std::string> dets;
        r.get("detections", dets);
        c.evaluation.detections = resolve(dets, base_dir);
    }
    if (!(c.evaluation.iou_threshold > 0 && c.evaluation.iou_threshold <= 1)) {
        throw ConfigError("'evaluation.iou_threshold' must be in (0, 1]");
    }
    if (!(c.evaluation.score_threshold >= 0)) throw ConfigError("'evaluation.score_threshold' must be >= 0");

    if (top.has("weak_label")) {
        const Reader r(top.at("weak_label"), "weak_label", {"score_threshold", "style_reference"});
        r.get("score_threshold", c.weak_label.score_threshold);
        std::optional<std::string> ref;
        r.get("style_reference", ref);
        c.weak_label.style_reference = resolve(ref, base_dir);
    }
    if (top.has("bench")) {
        const Reader r(top.at("bench"), "bench", {"warmup", "runs"});
        r.get("warmup", c.bench.warmup);
        r.get("runs", c.bench.runs);
        if (c.bench.warmup < 0 || c.bench.runs < 1) throw ConfigError("bench needs warmup >= 0 and runs >= 1");
    }
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    PipelineConfig c = from_json(j, fs::absolute(path).parent_path());
    c.source_path = path;
    return c;
}

namespace {

void require(bool ok, const std::string& what, PipelineKind k) {
    if (!ok) throw ConfigError("pipeline " + to_string(k) + " requires " + what);
}

void must_exist(const std::optional<fs::path>& p, const std::string& key) {
    if (p && !fs::exists(*p)) throw ConfigError("'" + key + "' refers to a missing path: " + p->string());
}

}  // namespace

void PipelineConfig::check_launch() const {
    must_exist(datasets.train, "datasets.train");
    must_exist(datasets.eval, "datasets.eval");
    must_exist(datasets.content, "datasets.content");
    must_exist(datasets.style, "datasets.style");
    must_exist(datasets.paired, "datasets.paired");
    must_exist(datasets.unlabeled_dir, "datasets.unlabeled_dir");
    must_exist(datasets.probe, "datasets.probe");
    must_exist(detector_handle, "detector_handle");
    must_exist(style.checkpoint, "style.checkpoint");
    must_exist(evaluation.detections, "evaluation.detections");
    must_exist(weak_label.style_reference, "weak_label.style_reference");

    const auto k = pipeline;
    const bool has_detector = detector.has_value() || detector_handle.has_value();
    const bool has_style = style.checkpoint.has_value() || style.train.has_value();
    switch (k) {
        case PipelineKind::baseline:
            require(datasets.train.has_value(), "datasets.train", k);
            require(detector.has_value(), "a detector section", k);
            break;
        case PipelineKind::odsc:
            require(datasets.train.has_value(), "datasets.train (thermal)", k);
            require(datasets.style.has_value(), "datasets.style (visible)", k);
            require(detector.has_value(), "a detector section", k);
            require(has_style, "style.checkpoint or style.train", k);
            break;
        case PipelineKind::sanity_swap:
            require(datasets.train.has_value() || datasets.eval.has_value(), "datasets.train or datasets.eval", k);
            require(datasets.style.has_value(), "datasets.style", k);
            require(has_detector, "detector_handle or a detector section", k);
            require(style.checkpoint.has_value(), "style.checkpoint", k);
            require(detector_handle.has_value() || datasets.train.has_value(),
                    "datasets.train to train the baseline detector", k);
            break;
        case PipelineKind::cdmt:
            require(datasets.paired.has_value(), "datasets.paired", k);
            require(detector.has_value(), "a detector section", k);
            require(has_style, "style.checkpoint or style.train", k);
            break;
        case PipelineKind::weak_label:
            require(datasets.unlabeled_dir.has_value(), "datasets.unlabeled_dir", k);
            require(detector_handle.has_value(), "detector_handle", k);
            require(style.checkpoint.has_value(), "style.checkpoint", k);
            require(weak_label.style_reference.has_value(), "weak_label.style_reference", k);
            break;
        case PipelineKind::bench:
            require(detector_handle.has_value(), "detector_handle", k);
            require(datasets.eval.has_value() || datasets.train.has_value(), "datasets.eval", k);
            break;
        case PipelineKind::style_train:
            require(datasets.content.has_value(), "datasets.content", k);
            require(datasets.style.has_value(), "datasets.style", k);
            require(style.train.has_value(), "style.train", k);
            break;
        case PipelineKind::stylize:
            require(datasets.content.has_value(), "datasets.content", k);
            require(datasets.style.has_value(), "datasets.style", k);
            require(style.checkpoint.has_value(), "style.checkpoint", k);
            break;
        case PipelineKind::eval:
            require(datasets.eval.has_value(), "datasets.eval", k);
            require(detector_handle.has_value() || evaluation.detections.has_value(),
                    "detector_handle or evaluation.detections", k);
            break;
    }
}

json PipelineConfig::snapshot() const {
    json d = nullptr;
    if (detector) {
        d = {{"architecture", detection::to_string(detector->architecture)},
             {"backbone", detection::to_string(detector->backbone)},
             {"external_command", detector->external.command}};
        if (detector->learning_rate) d["learning_rate"] = *detector->learning_rate;
        if (detector->epochs) d["epochs"] = *detector->epochs;
        if (detector->batch_size) d["batch_size"] = *detector->batch_size;
        if (detector->input_size) d["input_size"] = *detector->input_size;
        if (detector->class_set) d["class_set"] = *detector->class_set;
        if (detector->seed) d["seed"] = *detector->seed;
    }
    return {{"pipeline", to_string(pipeline)},
            {"seed", seed},
            {"deterministic", deterministic},
            {"output_dir", fs::absolute(output_dir).lexically_normal().string()},
            {"datasets",
             {{"train", opt_path(datasets.train)},
              {"eval", opt_path(datasets.eval)},
              {"content", opt_path(datasets.content)},
              {"style", opt_path(datasets.style)},
              {"paired", opt_path(datasets.paired)},
              {"unlabeled_dir", opt_path(datasets.unlabeled_dir)},
              {"probe", opt_path(datasets.probe)}}},
            {"detector", d},
            {"detector_handle", opt_path(detector_handle)},
            {"style",
             {{"checkpoint", opt_path(style.checkpoint)},
              {"train", style.train ? *style.train : json(nullptr)},
              {"stylize_size", style.stylize_size},
              {"workers", style.workers}}},
            {"evaluation",
             {{"iou_threshold", evaluation.iou_threshold},
              {"interpolation", eval::to_string(evaluation.interpolation)},
              {"score_threshold", evaluation.score_threshold},
              {"detections", opt_path(evaluation.detections)}}},
            {"weak_label",
             {{"score_threshold", weak_label.score_threshold},
              {"style_reference", opt_path(weak_label.style_reference)}}},
            {"bench", {{"warmup", bench.warmup}, {"runs", bench.runs}}}};
}

}  // namespace thermoscope::pipeline
