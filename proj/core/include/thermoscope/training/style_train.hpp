#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/data/types.hpp"
#include "thermoscope/style/losses.hpp"
#include "thermoscope/training/checkpoint.hpp"

namespace thermoscope::training {

struct StyleTrainConfig {
    data::DatasetManifest content_manifest;
    data::DatasetManifest style_manifest;
    int epochs = 100;
    int batch_size = 4;
    double learning_rate = 1e-3;
    std::vector<int> style_sizes{256, 512, 768};
    int content_size = 256;
    style::LossWeights loss_weights{1.0, 5.0, 1e-6};
    std::uint64_t seed = 0;
    style::GeneratorArch generator;
    bool deterministic = true;

    void validate() const;
    // Hyperparameters only; manifests are summarised by name and size.
    nlohmann::json snapshot() const;
    // Reads hyperparameters from a config object; unknown keys are errors.
    static StyleTrainConfig from_json(const nlohmann::json& j);
};

struct TrainLogEntry {
    long iteration = 0;
    double total = 0;
    double content = 0;
    double style = 0;
    double tv = 0;
    int style_size = 0;
    double t = 0;  // seconds since training started
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
    std::size_t skipped_images = 0;
    std::vector<std::string> warnings;

    // One JSON object per line: {iter, total, content, style, tv, style_size, t}.
    void write_jsonl(const std::filesystem::path& path) const;
    std::vector<LossRecord> history() const;
};

struct StyleTrainResult {
    Checkpoint checkpoint;
    TrainLog log;
};

// Content images at content_size x content_size; style images at any size
// (resized to the cycling style size on use).
StyleTrainResult train_msgnet_images(const StyleTrainConfig& config, const std::vector<Image>& content_images,
                                     const std::vector<Image>& style_images, const style::LossNetwork& network);

// Loads every record of both manifests, skipping unreadable files with a
// counted warning.
StyleTrainResult train_msgnet(const StyleTrainConfig& config, const style::LossNetwork& network);

}  // namespace thermoscope::training
