#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "thermoscope/detection/detector.hpp"
#include "thermoscope/eval/voc_eval.hpp"

namespace thermoscope::pipeline {

enum class PipelineKind { baseline, odsc, sanity_swap, cdmt, weak_label, bench, style_train, stylize, eval };

std::string to_string(PipelineKind k);  // CLI spelling: "sanity-swap", "weak-label", ...
PipelineKind parse_pipeline(const std::string& s);

// Manifest paths (JSON manifests) and directories. Relative paths resolve
// against the config file's directory.
struct DatasetRefs {
    std::optional<std::filesystem::path> train;    // labeled training manifest with a split
    std::optional<std::filesystem::path> eval;     // evaluation manifest; defaults to train's val split
    std::optional<std::filesystem::path> content;  // style training content images
    std::optional<std::filesystem::path> style;    // style images (visible for ODSC)
    std::optional<std::filesystem::path> paired;   // both spectra sharing pair keys (CDMT)
    std::optional<std::filesystem::path> unlabeled_dir;
    std::optional<std::filesystem::path> probe;  // labeled subset for weak-label scoring
};

// Only architecture and backbone are required; the rest default to the
// experimental setup for the pipeline's protocol and the training manifest's
// class set.
struct DetectorSection {
    detection::Architecture architecture = detection::Architecture::reference_mini;
    detection::Backbone backbone = detection::Backbone::mini;
    std::optional<double> learning_rate;
    std::optional<int> epochs;
    std::optional<int> batch_size;
    std::optional<int> input_size;
    std::optional<std::vector<std::string>> class_set;
    std::optional<std::uint64_t> seed;
    std::optional<detection::Protocol> protocol;
    detection::ExternalDetectorOptions external;
};

struct StyleSection {
    std::optional<std::filesystem::path> checkpoint;
    std::optional<nlohmann::json> train;  // style-train hyperparameters
    int stylize_size = 256;               // style images resized to this square side; 0 keeps them
    int workers = 1;
};

struct EvaluationSection {
    double iou_threshold = eval::kDefaultIouThreshold;
    eval::Interpolation interpolation = eval::Interpolation::all_point;
    double score_threshold = detection::kEvalScoreThreshold;
    std::optional<std::filesystem::path> detections;  // eval pipeline: score a JSONL file instead
};

struct WeakLabelSection {
    double score_threshold = detection::kDisplayScoreThreshold;
    std::optional<std::filesystem::path> style_reference;  // style image for the unlabeled frames
};

struct BenchSection {
    int warmup = 2;
    int runs = 10;
};

struct PipelineConfig {
    PipelineKind pipeline = PipelineKind::baseline;
    std::uint64_t seed = 0;
    bool deterministic = true;
    std::filesystem::path output_dir = "runs/out";
    DatasetRefs datasets;
    std::optional<DetectorSection> detector;
    std::optional<std::filesystem::path> detector_handle;
    StyleSection style;
    EvaluationSection evaluation;
    WeakLabelSection weak_label;
    BenchSection bench;

    std::filesystem::path source_path;  // config file, if loaded from one

    // Unknown keys anywhere are ConfigErrors.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static PipelineConfig load(const std::filesystem::path& path);

    // Pipeline-specific required fields and existence of referenced files.
    void check_launch() const;

    // Resolved, normalised view of the config (paths absolute).
    nlohmann::json snapshot() const;
};

}  // namespace thermoscope::pipeline
