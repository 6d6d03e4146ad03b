#include "thermoscope/pipeline/pipelines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "thermoscope/data/manifest.hpp"
#include "thermoscope/data/voc.hpp"
#include "thermoscope/detection/benchmark.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/eval/report.hpp"
#include "thermoscope/random.hpp"
#include "thermoscope/style/loss_network.hpp"
#include "thermoscope/training/style_train.hpp"
#include "thermoscope/training/stylize.hpp"

namespace thermoscope::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using data::DatasetManifest;
using data::SplitRole;

namespace {

void say(std::ostream* log, const std::string& line) {
    if (log) *log << "[thermoscope] " << line << std::endl;
}

std::vector<const data::LabeledImage*> pointers(const DatasetManifest& m) {
    std::vector<const data::LabeledImage*> out;
    for (const auto& r : m.records) out.push_back(&r);
    return out;
}

// Every run starts from here: output directory, record skeleton, config hash.
RunRecord begin(const PipelineConfig& config, const std::string& tag) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.output_dir.string() + ": " + ec.message());
    RunRecord r;
    r.pipeline = to_string(config.pipeline);
    r.tag = tag;
    r.config = config.snapshot();
    r.started_at = utc_timestamp();
    if (!config.source_path.empty()) r.input_hashes["config"] = git_blob_hash(config.source_path);
    return r;
}

DatasetManifest load_input(RunRecord& record, const std::string& key, const fs::path& path) {
    DatasetManifest m = data::load_manifest(path);
    record.input_hashes[key] = git_blob_hash(path);
    record.input_hashes[key + ":images"] = manifest_images_hash(m);
    return m;
}

// The val split when the manifest has one, otherwise every record.
DatasetManifest evaluation_view(const DatasetManifest& m) {
    DatasetManifest val = m.subset(SplitRole::val);
    return val.records.empty() ? m : val;
}

// Train split; a manifest without any split assignment is all training data.
DatasetManifest training_view(const DatasetManifest& m) {
    DatasetManifest train = m.subset(SplitRole::train);
    return (train.records.empty() && m.split.empty()) ? m : train;
}

DatasetManifest require_split(const DatasetManifest& m, SplitRole role, const std::string& what) {
    DatasetManifest part = m.subset(role);
    if (part.records.empty()) {
        throw ConfigError("manifest '" + m.name + "' has no " + data::to_string(role) + " split (" + what + ")");
    }
    return part;
}

std::vector<std::string> frames_of(const DatasetManifest& m) {
    std::vector<std::string> out;
    for (const auto& r : m.records) out.push_back(r.pair_key.empty() ? r.image_id : r.pair_key);
    std::sort(out.begin(), out.end());
    return out;
}

detection::Protocol default_protocol(PipelineKind k) {
    if (k == PipelineKind::cdmt) return detection::Protocol::cdmt;
    if (k == PipelineKind::odsc) return detection::Protocol::odsc;
    return detection::Protocol::baseline;
}

// A detector may cover a subset of the dataset's classes (a person detector
// on FLIR frames); annotations of the other classes are dropped.
DatasetManifest restrict_classes(const DatasetManifest& m, const std::vector<std::string>& class_set) {
    for (const auto& c : class_set) {
        if (!m.has_class(c)) throw ConfigError("class '" + c + "' is not in the class set of manifest '" + m.name + "'");
    }
    if (class_set.size() == m.class_set.size()) return m;
    DatasetManifest out = m;
    out.class_set = class_set;
    for (auto& r : out.records) {
        std::erase_if(r.annotations, [&](const data::ObjectAnnotation& a) {
            return std::find(class_set.begin(), class_set.end(), a.label) == class_set.end();
        });
    }
    return out;
}

detection::DetectorSpec resolve_spec(const PipelineConfig& config, const DatasetManifest& train_set) {
    if (!config.detector) throw ConfigError("pipeline " + to_string(config.pipeline) + " needs a detector section");
    const DetectorSection& d = *config.detector;
    detection::DetectorSpec spec = detection::paper_defaults(
        d.architecture, d.backbone, d.protocol.value_or(default_protocol(config.pipeline)));
    spec.class_set = d.class_set.value_or(train_set.class_set);
    if (d.learning_rate) spec.learning_rate = *d.learning_rate;
    if (d.epochs) spec.epochs = *d.epochs;
    if (d.batch_size) spec.batch_size = *d.batch_size;
    if (d.input_size) spec.input_size = *d.input_size;
    spec.seed = d.seed.value_or(SeedStreams(config.seed).derive("detector"));
    spec.validate();
    restrict_classes(train_set, spec.class_set);
    return spec;
}

detection::ExternalDetectorOptions external_options(const PipelineConfig& config) {
    return config.detector ? config.detector->external : detection::ExternalDetectorOptions{};
}

detection::DetectorHandle train_and_save(const PipelineConfig& config, const DatasetManifest& train_set,
                                         const fs::path& dir, RunRecord& record, std::ostream* log) {
    const detection::DetectorSpec spec = resolve_spec(config, train_set);
    const auto adapter = detection::register_detector(spec, external_options(config));
    say(log, "training " + detection::to_string(spec.architecture) + "/" + detection::to_string(spec.backbone) +
                 " on " + std::to_string(train_set.records.size()) + " images, " + std::to_string(spec.epochs) +
                 " epochs");
    detection::DetectorTrainLog train_log;
    auto handle = detection::train_detector(*adapter, restrict_classes(train_set, spec.class_set), spec, &train_log);
    fs::create_directories(dir);
    handle->save(dir / "detector.tsck");
    train_log.write_jsonl(dir / "detector_train.jsonl");
    record.add_artifact("detector", dir / "detector.tsck");
    record.add_artifact("detector_train_log", dir / "detector_train.jsonl");
    record.extra["detector_spec"] = spec.to_json();
    if (!train_log.entries.empty()) record.extra["detector_final_loss"] = train_log.final_loss();
    record.warnings.insert(record.warnings.end(), train_log.warnings.begin(), train_log.warnings.end());
    return handle;
}

detection::DetectorHandle load_handle(const PipelineConfig& config, RunRecord& record) {
    record.input_hashes["detector_handle"] = git_blob_hash(*config.detector_handle);
    return detection::load_detector(*config.detector_handle, external_options(config));
}

training::Checkpoint obtain_checkpoint(const PipelineConfig& config, const DatasetManifest& content,
                                       const DatasetManifest& style_source, const fs::path& dir, RunRecord& record,
                                       std::ostream* log) {
    if (config.style.checkpoint) {
        record.input_hashes["style.checkpoint"] = git_blob_hash(*config.style.checkpoint);
        return training::Checkpoint::load(*config.style.checkpoint);
    }
    if (!config.style.train) throw ConfigError("style.checkpoint or style.train is required");
    training::StyleTrainConfig tc = training::StyleTrainConfig::from_json(*config.style.train);
    if (!config.style.train->contains("seed")) tc.seed = SeedStreams(config.seed).derive("style");
    tc.deterministic = config.deterministic;
    tc.content_manifest = content;
    tc.style_manifest = style_source;
    const style::LossNetwork network = style::LossNetwork::from_cache_or_random();
    if (!network.pretrained()) {
        record.warnings.push_back("loss network weights not found in THERMOSCOPE_CACHE; using seeded random weights");
    }
    say(log, "training style network: " + std::to_string(content.records.size()) + " content, " +
                 std::to_string(style_source.records.size()) + " style images, " + std::to_string(tc.epochs) +
                 " epochs");
    auto result = training::train_msgnet(tc, network);
    fs::create_directories(dir);
    result.checkpoint.save(dir / "msgnet.tsck");
    result.log.write_jsonl(dir / "style_train.jsonl");
    record.add_artifact("style_checkpoint", dir / "msgnet.tsck");
    record.add_artifact("style_train_log", dir / "style_train.jsonl");
    record.extra["loss_network"] = network.source();
    record.warnings.insert(record.warnings.end(), result.log.warnings.begin(), result.log.warnings.end());
    return std::move(result.checkpoint);
}

void save_assignments(const fs::path& path, const training::StylizeResult& r) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << json(r.assignments).dump(2) << '\n';
}

DatasetManifest stylize_into(const PipelineConfig& config, const DatasetManifest& manifest,
                             const DatasetManifest& style_source, const training::Checkpoint& checkpoint,
                             const std::string& name, RunRecord& record, std::ostream* log) {
    say(log, "stylizing " + std::to_string(manifest.records.size()) + " images into " + name);
    training::StylizeOptions options;
    options.style_size = config.style.stylize_size;
    options.workers = config.style.workers;
    const auto dir = config.output_dir / name;
    auto result = training::stylize_dataset(manifest, style_source, checkpoint, dir,
                                            SeedStreams(config.seed).derive("stylize:" + name), options);
    // Style transfer must not touch geometry, membership or split.
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& a = manifest.records[i];
        const auto& b = result.manifest.records[i];
        if (a.image_id != b.image_id || a.annotations != b.annotations || a.spectrum != b.spectrum) {
            throw ValidationError("stylized record " + a.image_id + " lost its identity or annotations");
        }
    }
    if (result.manifest.split != manifest.split) throw ValidationError("stylization changed split membership");
    data::save_manifest(config.output_dir / (name + ".json"), result.manifest);
    save_assignments(config.output_dir / (name + "_assignments.json"), result);
    record.add_artifact(name, dir);
    record.add_artifact(name + "_manifest", config.output_dir / (name + ".json"));
    record.add_artifact(name + "_assignments", config.output_dir / (name + "_assignments.json"));
    return std::move(result.manifest);
}

eval::EvalReport score(const PipelineConfig& config, const detection::TrainedDetector& handle,
                       const DatasetManifest& eval_source, const fs::path& dir, const std::string& tag,
                       RunRecord& record, std::ostream* log) {
    const DatasetManifest eval_set = restrict_classes(eval_source, handle.spec().class_set);
    say(log, "evaluating " + tag + " on " + std::to_string(eval_set.records.size()) + " images");
    detection::InferStats stats;
    const auto dets = detection::infer(handle, eval_set, config.evaluation.score_threshold, &stats);
    if (stats.skipped_images > 0) {
        record.warnings.insert(record.warnings.end(), stats.warnings.begin(), stats.warnings.end());
    }
    fs::create_directories(dir);
    detection::write_detections_jsonl(dir / "detections.jsonl", dets);
    const eval::EvalReport report = eval::evaluate(
        dets, eval_set, {config.evaluation.iou_threshold, config.evaluation.interpolation, tag});
    eval::save_report(dir / "report.json", report);
    record.add_artifact("detections", dir / "detections.jsonl");
    record.add_artifact("report", dir / "report.json");
    record.report = report;
    record.eval_frames = frames_of(eval_set);
    return report;
}

void finish(RunRecord& record, const fs::path& dir) {
    record.finished_at = utc_timestamp();
    record.add_artifact("run_record", dir / "run_record.json");
    record.save(dir / "run_record.json");
    record.check_artifacts();
}

}  // namespace

void check_disjoint(const std::vector<const data::LabeledImage*>& training_inputs,
                    const std::vector<const data::LabeledImage*>& evaluation) {
    std::set<std::string> ids;
    std::set<std::string> keys;
    for (const auto* r : training_inputs) {
        ids.insert(r->image_id);
        if (!r->pair_key.empty()) keys.insert(r->pair_key);
    }
    for (const auto* r : evaluation) {
        if (ids.contains(r->image_id)) {
            throw ValidationError("split hygiene: evaluation image " + r->image_id + " is also a training input");
        }
        if (!r->pair_key.empty() && keys.contains(r->pair_key)) {
            throw ValidationError("split hygiene: evaluation frame " + r->pair_key + " is also a training input");
        }
    }
}

RunRecord run_baseline(const PipelineConfig& config, std::ostream* log) {
    RunRecord record = begin(config, "baseline");
    const DatasetManifest source = load_input(record, "datasets.train", *config.datasets.train);
    const DatasetManifest train_set = require_split(source, SplitRole::train, "training");
    const DatasetManifest eval_set =
        config.datasets.eval ? evaluation_view(load_input(record, "datasets.eval", *config.datasets.eval))
                             : require_split(source, SplitRole::val, "evaluation");
    check_disjoint(pointers(train_set), pointers(eval_set));

    const auto handle = train_and_save(config, train_set, config.output_dir, record, log);
    score(config, *handle, eval_set, config.output_dir, "baseline", record, log);
    finish(record, config.output_dir);
    return record;
}

RunRecord run_odsc(const PipelineConfig& config, std::ostream* log) {
    RunRecord record = begin(config, "odsc");
    const DatasetManifest thermal = load_input(record, "datasets.train", *config.datasets.train);
    const DatasetManifest train_set = require_split(thermal, SplitRole::train, "training");
    const DatasetManifest eval_set =
        config.datasets.eval ? evaluation_view(load_input(record, "datasets.eval", *config.datasets.eval))
                             : require_split(thermal, SplitRole::val, "evaluation");
    const DatasetManifest style_source =
        training_view(load_input(record, "datasets.style", *config.datasets.style));
    const DatasetManifest content =
        config.datasets.content ? training_view(load_input(record, "datasets.content", *config.datasets.content))
                                : train_set;
    if (style_source.records.empty()) throw ConfigError("datasets.style has no training images");

    auto training_inputs = pointers(train_set);
    for (const auto* r : pointers(style_source)) training_inputs.push_back(r);
    for (const auto* r : pointers(content)) training_inputs.push_back(r);
    check_disjoint(training_inputs, pointers(eval_set));
    resolve_spec(config, train_set);

    const auto checkpoint = obtain_checkpoint(config, content, style_source, config.output_dir / "style", record, log);
    const DatasetManifest styled =
        stylize_into(config, train_set, style_source, checkpoint, "styled_train", record, log);
    check_disjoint(pointers(styled), pointers(eval_set));

    const auto handle = train_and_save(config, styled, config.output_dir, record, log);
    score(config, *handle, eval_set, config.output_dir, "odsc", record, log);
    finish(record, config.output_dir);
    return record;
}

RunRecord run_sanity_swap(const PipelineConfig& config, std::ostream* log) {
    RunRecord record = begin(config, "sanity-swap");
    std::optional<DatasetManifest> source;
    if (config.datasets.train) source = load_input(record, "datasets.train", *config.datasets.train);
    const DatasetManifest eval_base =
        config.datasets.eval ? evaluation_view(load_input(record, "datasets.eval", *config.datasets.eval))
                             : require_split(*source, SplitRole::val, "evaluation");
    const DatasetManifest style_source =
        training_view(load_input(record, "datasets.style", *config.datasets.style));

    detection::DetectorHandle handle;
    if (config.detector_handle) {
        handle = load_handle(config, record);
    } else {
        const DatasetManifest train_set = require_split(*source, SplitRole::train, "training");
        check_disjoint(pointers(train_set), pointers(eval_base));
        handle = train_and_save(config, train_set, config.output_dir / "baseline", record, log);
    }
    const auto checkpoint = obtain_checkpoint(config, eval_base, style_source, config.output_dir / "style", record, log);
    const DatasetManifest styled = stylize_into(config, eval_base, style_source, checkpoint, "styled_val", record, log);
    score(config, *handle, styled, config.output_dir, "sanity-swap", record, log);
    finish(record, config.output_dir);
    return record;
}

namespace {

void check_paired(const DatasetManifest& m) {
    std::map<std::string, std::pair<int, int>> counts;  // pair key -> (thermal, visible)
    for (const auto& r : m.records) {
        if (r.pair_key.empty()) {
            throw ConfigError("CDMT needs a paired dataset; record " + r.image_id + " has no pair key");
        }
        auto& c = counts[r.pair_key];
        (r.spectrum == data::Spectrum::thermal ? c.first : c.second) += 1;
    }
    for (const auto& [key, c] : counts) {
        if (c.first != 1 || c.second != 1) {
            throw ConfigError("CDMT needs a paired dataset; frame " + key + " lacks exactly one thermal and one visible image");
        }
    }
}

DatasetManifest spectrum_view(const DatasetManifest& m, data::Spectrum s) {
    DatasetManifest out = m;
    out.records.clear();
    out.split.clear();
    for (const auto& r : m.records) {
        if (r.spectrum != s) continue;
        out.records.push_back(r);
        if (auto it = m.split.find(r.image_id); it != m.split.end()) out.split[r.image_id] = it->second;
    }
    out.name = m.name + ":" + data::to_string(s);
    return out;
}

}  // namespace

std::pair<RunRecord, RunRecord> run_cdmt(const PipelineConfig& config, std::ostream* log) {
    RunRecord shared = begin(config, "cdmt");
    const DatasetManifest paired = load_input(shared, "datasets.paired", *config.datasets.paired);
    check_paired(paired);
    const DatasetManifest visible = spectrum_view(paired, data::Spectrum::visible);
    const DatasetManifest thermal = spectrum_view(paired, data::Spectrum::thermal);
    const DatasetManifest visible_train = require_split(visible, SplitRole::train, "training");
    const DatasetManifest visible_val = require_split(visible, SplitRole::val, "evaluation");
    const DatasetManifest thermal_train = require_split(thermal, SplitRole::train, "style source");
    const DatasetManifest thermal_val = require_split(thermal, SplitRole::val, "evaluation");

    auto training_inputs = pointers(visible_train);
    for (const auto* r : pointers(thermal_train)) training_inputs.push_back(r);
    check_disjoint(training_inputs, pointers(thermal_val));
    check_disjoint(training_inputs, pointers(visible_val));
    resolve_spec(config, visible_train);

    // Visible content, thermal style.
    const auto checkpoint =
        obtain_checkpoint(config, visible_train, thermal_train, config.output_dir / "style", shared, log);
    const auto handle = train_and_save(config, visible_train, config.output_dir, shared, log);
    const DatasetManifest styled_val =
        stylize_into(config, visible_val, thermal_train, checkpoint, "styled_val", shared, log);

    RunRecord without = shared;
    without.tag = "cdmt-without-style";
    score(config, *handle, thermal_val, config.output_dir / "without-style", without.tag, without, log);
    finish(without, config.output_dir / "without-style");

    RunRecord with = shared;
    with.tag = "cdmt-with-style";
    score(config, *handle, styled_val, config.output_dir / "with-style", with.tag, with, log);
    finish(with, config.output_dir / "with-style");
    return {std::move(without), std::move(with)};
}

namespace {

DatasetManifest unlabeled_manifest(const fs::path& dir, const std::vector<std::string>& class_set) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(entry.path());
    }
    if (files.empty()) throw ValidationError("no PNG images in unlabeled directory " + dir.string());
    std::sort(files.begin(), files.end());
    DatasetManifest m;
    m.name = "unlabeled:" + dir.filename().string();
    m.class_set = class_set;
    for (const auto& f : files) {
        data::LabeledImage r;
        r.image_id = f.stem().string();
        r.path = f.string();
        const ImageSize size = probe_image_size(f);
        r.width = size.width;
        r.height = size.height;
        r.spectrum = data::Spectrum::thermal;
        m.records.push_back(std::move(r));
    }
    return m;
}

// Styled copies of every record, all against one style image.
DatasetManifest stylize_with_reference(const DatasetManifest& m, const Image& style_image,
                                       const training::Checkpoint& checkpoint, const fs::path& dir) {
    fs::create_directories(dir);
    style::StyleTargets targets;
    targets.comatch_target = checkpoint.generator.style_gram(style_image);
    DatasetManifest out = m;
    for (auto& r : out.records) {
        const Image styled = style::generator_forward(load_image(r.path), checkpoint.generator, targets);
        const fs::path path = dir / (training::sanitize_id(r.image_id) + ".png");
        save_png(path, styled);
        r.path = path.string();
    }
    return out;
}

// Rounded to whole pixels as VOC stores them; boxes that collapse are dropped.
std::vector<data::ObjectAnnotation> pseudo_labels(const std::vector<detection::Detection>& dets,
                                                  const std::string& image_id) {
    std::vector<data::ObjectAnnotation> out;
    for (const auto& d : dets) {
        if (d.image_id != image_id) continue;
        const data::BoundingBox b{std::floor(d.box.x_min + 0.5), std::floor(d.box.y_min + 0.5),
                                  std::floor(d.box.x_max + 0.5), std::floor(d.box.y_max + 0.5)};
        if (b.valid()) out.push_back({b, d.label, false});
    }
    return out;
}

}  // namespace

RunRecord run_weak_label(const PipelineConfig& config, std::ostream* log) {
    RunRecord record = begin(config, "weak-label");
    const auto handle = load_handle(config, record);
    const auto checkpoint = training::Checkpoint::load(*config.style.checkpoint);
    record.input_hashes["style.checkpoint"] = git_blob_hash(*config.style.checkpoint);
    record.input_hashes["weak_label.style_reference"] = git_blob_hash(*config.weak_label.style_reference);
    Image reference = load_image(*config.weak_label.style_reference);
    if (config.style.stylize_size > 0) {
        reference = resize_bilinear(reference, config.style.stylize_size, config.style.stylize_size);
    }
    const double threshold = config.weak_label.score_threshold;
    const auto& class_set = handle->spec().class_set;

    const DatasetManifest unlabeled = unlabeled_manifest(*config.datasets.unlabeled_dir, class_set);
    record.input_hashes["datasets.unlabeled_dir:images"] = manifest_images_hash(unlabeled);
    say(log, "weak-labeling " + std::to_string(unlabeled.records.size()) + " images");
    const DatasetManifest styled =
        stylize_with_reference(unlabeled, reference, checkpoint, config.output_dir / "styled_unlabeled");
    record.add_artifact("styled_unlabeled", config.output_dir / "styled_unlabeled");

    detection::InferStats stats;
    const auto dets = detection::infer(*handle, styled, threshold, &stats);
    record.warnings.insert(record.warnings.end(), stats.warnings.begin(), stats.warnings.end());
    const fs::path label_dir = config.output_dir / "pseudo_labels";
    fs::create_directories(label_dir);
    DatasetManifest labeled = unlabeled;
    labeled.name = unlabeled.name + "+pseudo";
    for (auto& r : labeled.records) {
        r.annotations = pseudo_labels(dets, r.image_id);
        data::write_voc_xml(label_dir / (training::sanitize_id(r.image_id) + ".xml"), r);
    }
    data::save_manifest(config.output_dir / "pseudo_labels.json", labeled);
    record.add_artifact("pseudo_labels", label_dir);
    record.add_artifact("pseudo_labels_manifest", config.output_dir / "pseudo_labels.json");
    record.extra["images"] = labeled.records.size();
    record.extra["score_threshold"] = threshold;

    if (config.datasets.probe) {
        const DatasetManifest probe = load_input(record, "datasets.probe", *config.datasets.probe);
        const DatasetManifest probe_styled =
            stylize_with_reference(probe, reference, checkpoint, config.output_dir / "styled_probe");
        record.add_artifact("styled_probe", config.output_dir / "styled_probe");
        std::vector<detection::Detection> probe_dets;
        for (const auto& d : detection::infer(*handle, probe_styled, threshold)) {
            if (probe.has_class(d.label)) probe_dets.push_back(d);
        }
        const auto wl = eval::weak_label_report(probe_dets, probe, config.evaluation.iou_threshold);
        record.extra["weak_label_report"] = eval::to_json(wl);
        std::ofstream out(config.output_dir / "weak_label_report.json");
        out << eval::to_json(wl).dump(2) << '\n';
        if (!out) throw IoError("cannot write weak_label_report.json");
        record.add_artifact("weak_label_report", config.output_dir / "weak_label_report.json");
    }
    finish(record, config.output_dir);
    return record;
}

RunRecord run_bench(const PipelineConfig& config, std::ostream* log) {
    RunRecord record = begin(config, "bench");
    const auto handle = load_handle(config, record);
    const fs::path source = config.datasets.eval ? *config.datasets.eval : *config.datasets.train;
    const DatasetManifest images = evaluation_view(load_input(record, "datasets.eval", source));
    say(log, "benchmarking on " + std::to_string(images.records.size()) + " images, " +
                 std::to_string(config.bench.runs) + " runs");
    const auto fps = detection::benchmark_fps(*handle, images.records, config.bench.warmup, config.bench.runs);
    std::ofstream out(config.output_dir / "bench.json");
    out << fps.to_json().dump(2) << '\n';
    if (!out) throw IoError("cannot write bench.json");
    record.add_artifact("bench", config.output_dir / "bench.json");
    record.extra["fps"] = fps.to_json();
    finish(record, config.output_dir);
    return record;
}

RunRecord run_style_train(const PipelineConfig& config, std::ostream* log) {
    RunRecord record = begin(config, "style-train");
    const DatasetManifest content = training_view(load_input(record, "datasets.content", *config.datasets.content));
    const DatasetManifest style_source = training_view(load_input(record, "datasets.style", *config.datasets.style));
    PipelineConfig fresh = config;
    fresh.style.checkpoint.reset();
    obtain_checkpoint(fresh, content, style_source, config.output_dir, record, log);
    finish(record, config.output_dir);
    return record;
}

RunRecord run_stylize(const PipelineConfig& config, std::ostream* log) {
    RunRecord record = begin(config, "stylize");
    const DatasetManifest content = load_input(record, "datasets.content", *config.datasets.content);
    const DatasetManifest style_source = training_view(load_input(record, "datasets.style", *config.datasets.style));
    const auto checkpoint = obtain_checkpoint(config, content, style_source, config.output_dir, record, log);
    stylize_into(config, content, style_source, checkpoint, "styled", record, log);
    finish(record, config.output_dir);
    return record;
}

RunRecord run_eval(const PipelineConfig& config, std::ostream* log) {
    RunRecord record = begin(config, "eval");
    const DatasetManifest eval_set = evaluation_view(load_input(record, "datasets.eval", *config.datasets.eval));
    if (config.evaluation.detections) {
        record.input_hashes["evaluation.detections"] = git_blob_hash(*config.evaluation.detections);
        std::vector<detection::Detection> dets;
        for (auto& d : detection::read_detections_jsonl(*config.evaluation.detections)) {
            if (d.confidence >= config.evaluation.score_threshold && eval_set.find(d.image_id)) {
                dets.push_back(std::move(d));
            }
        }
        say(log, "scoring " + std::to_string(dets.size()) + " detections");
        const auto report = eval::evaluate(
            dets, eval_set, {config.evaluation.iou_threshold, config.evaluation.interpolation, "eval"});
        eval::save_report(config.output_dir / "report.json", report);
        record.add_artifact("report", config.output_dir / "report.json");
        record.report = report;
        record.eval_frames = frames_of(eval_set);
    } else {
        const auto handle = load_handle(config, record);
        score(config, *handle, eval_set, config.output_dir, "eval", record, log);
    }
    finish(record, config.output_dir);
    return record;
}

std::vector<RunRecord> run_pipeline(const PipelineConfig& config, std::ostream* log) {
    config.check_launch();
    switch (config.pipeline) {
        case PipelineKind::baseline: return {run_baseline(config, log)};
        case PipelineKind::odsc: return {run_odsc(config, log)};
        case PipelineKind::sanity_swap: return {run_sanity_swap(config, log)};
        case PipelineKind::cdmt: {
            auto [without, with] = run_cdmt(config, log);
            return {std::move(without), std::move(with)};
        }
        case PipelineKind::weak_label: return {run_weak_label(config, log)};
        case PipelineKind::bench: return {run_bench(config, log)};
        case PipelineKind::style_train: return {run_style_train(config, log)};
        case PipelineKind::stylize: return {run_stylize(config, log)};
        case PipelineKind::eval: return {run_eval(config, log)};
    }
    throw ConfigError("unhandled pipeline");
}

std::string summarize(const std::vector<RunRecord>& records) {
    std::vector<std::pair<std::string, eval::EvalReport>> rows;
    std::ostringstream out;
    std::set<std::string> warned;
    for (const auto& r : records) {
        if (r.report) rows.emplace_back(r.tag, *r.report);
    }
    if (!rows.empty()) out << eval::format_table(rows);
    for (const auto& r : records) {
        if (r.extra.contains("weak_label_report")) {
            const auto& wl = r.extra["weak_label_report"];
            out << "weak labels: TP=" << wl["tp"] << " FP=" << wl["fp"] << " FN=" << wl["fn"]
                << " accuracy=" << (wl["accuracy"].is_null() ? std::string("n/a") : wl["accuracy"].dump()) << '\n';
        } else if (r.extra.contains("images") && r.pipeline == "weak-label") {
            out << "weak labels written for " << r.extra["images"] << " images\n";
        }
        if (r.extra.contains("fps")) {
            out << "fps: " << r.extra["fps"]["mean_fps"].get<double>() << " +/- "
                << r.extra["fps"]["std_fps"].get<double>() << " (" << r.extra["fps"]["hardware"].get<std::string>()
                << ")\n";
        }
        if (!r.report && r.artifacts.contains("style_checkpoint")) {
            out << "style checkpoint: " << r.artifacts.at("style_checkpoint").string() << '\n';
        }
        if (r.artifacts.contains("styled_manifest") && r.pipeline == "stylize") {
            out << "styled manifest: " << r.artifacts.at("styled_manifest").string() << '\n';
        }
        for (const auto& w : r.warnings) {
            if (warned.insert(w).second) out << "warning: " << w << '\n';
        }
    }
    return out.str();
}

}  // namespace thermoscope::pipeline
