#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "thermoscope/data/types.hpp"
#include "thermoscope/detection/types.hpp"

namespace thermoscope::detection {

struct InferStats {
    std::size_t skipped_images = 0;
    std::vector<std::string> warnings;
};

struct DetectorTrainEntry {
    int epoch = 0;
    long iteration = 0;
    double loss = 0;
};

struct DetectorTrainLog {
    std::vector<DetectorTrainEntry> entries;
    std::size_t skipped_images = 0;
    std::vector<std::string> warnings;

    double epoch_mean(int epoch) const;
    double final_loss() const;
    void write_jsonl(const std::filesystem::path& path) const;
};

// Immutable once trained; infer may be called concurrently.
class TrainedDetector {
public:
    virtual ~TrainedDetector() = default;

    virtual const DetectorSpec& spec() const = 0;
    // Detections with confidence >= score_threshold, each image's list in
    // descending confidence, images in input order. Unreadable images are
    // skipped and counted in stats.
    virtual std::vector<Detection> infer(const std::vector<data::LabeledImage>& images, double score_threshold,
                                         InferStats* stats = nullptr) const = 0;
    virtual void save(const std::filesystem::path& path) const = 0;
};

using DetectorHandle = std::shared_ptr<const TrainedDetector>;

class DetectorAdapter {
public:
    virtual ~DetectorAdapter() = default;

    virtual const DetectorSpec& spec() const = 0;
    virtual DetectorHandle train(const data::DatasetManifest& train_set, DetectorTrainLog* log) const = 0;
    virtual DetectorHandle load(const std::filesystem::path& path) const = 0;
};

// How the large published detectors are reached: a user-supplied program run as
// `<command> <job.json>`; see ExternalDetectorAdapter.
struct ExternalDetectorOptions {
    std::string command;
    std::filesystem::path work_dir;  // defaults to a temp directory
};

// ConfigError listing the valid pairs for an unregistered combination.
std::unique_ptr<DetectorAdapter> register_detector(const DetectorSpec& spec,
                                                   const ExternalDetectorOptions& external = {});

// The manifest's class set must equal the DetectorSpec's; every record is used.
DetectorHandle train_detector(const DetectorAdapter& adapter, const data::DatasetManifest& train_set,
                              const DetectorSpec& spec, DetectorTrainLog* log = nullptr);

std::vector<Detection> infer(const TrainedDetector& handle, const std::vector<data::LabeledImage>& images,
                             double score_threshold = kEvalScoreThreshold, InferStats* stats = nullptr);
std::vector<Detection> infer(const TrainedDetector& handle, const data::DatasetManifest& manifest,
                             double score_threshold = kEvalScoreThreshold, InferStats* stats = nullptr);

// Dispatches on the architecture recorded in the handle file.
DetectorHandle load_detector(const std::filesystem::path& path, const ExternalDetectorOptions& external = {});

}  // namespace thermoscope::detection
