#include <algorithm>
#include <fstream>
#include <numeric>

#include "thermoscope/container.hpp"
#include "thermoscope/detection/detector.hpp"
#include "thermoscope/detection/external.hpp"
#include "thermoscope/detection/reference_mini.hpp"
#include "thermoscope/error.hpp"

namespace thermoscope::detection {

double DetectorTrainLog::epoch_mean(int epoch) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& e : entries) {
        if (e.epoch == epoch) {
            sum += e.loss;
            ++count;
        }
    }
    if (count == 0) throw StateError("no training iterations logged for epoch " + std::to_string(epoch));
    return sum / count;
}

double DetectorTrainLog::final_loss() const {
    if (entries.empty()) throw StateError("training log is empty");
    return entries.back().loss;
}

void DetectorTrainLog::write_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write detector train log " + path.string());
    for (const auto& e : entries) {
        out << nlohmann::json{{"epoch", e.epoch}, {"iter", e.iteration}, {"loss", e.loss}}.dump() << '\n';
    }
}

std::unique_ptr<DetectorAdapter> register_detector(const DetectorSpec& spec, const ExternalDetectorOptions& external) {
    spec.validate();
    if (spec.architecture == Architecture::reference_mini) return std::make_unique<ReferenceMiniAdapter>(spec);
    return std::make_unique<ExternalDetectorAdapter>(spec, external);
}

DetectorHandle train_detector(const DetectorAdapter& adapter, const data::DatasetManifest& train_set,
                              const DetectorSpec& spec, DetectorTrainLog* log) {
    if (!(spec == adapter.spec())) throw ConfigError("detector spec differs from the registered adapter's spec");
    auto sorted = [](std::vector<std::string> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    if (sorted(train_set.class_set) != sorted(spec.class_set)) {
        throw ConfigError("manifest '" + train_set.name + "' class set does not match the detector spec");
    }
    return adapter.train(train_set, log);
}

std::vector<Detection> infer(const TrainedDetector& handle, const std::vector<data::LabeledImage>& images,
                             double score_threshold, InferStats* stats) {
    return handle.infer(images, score_threshold, stats);
}

std::vector<Detection> infer(const TrainedDetector& handle, const data::DatasetManifest& manifest,
                             double score_threshold, InferStats* stats) {
    return handle.infer(manifest.records, score_threshold, stats);
}

DetectorHandle load_detector(const std::filesystem::path& path, const ExternalDetectorOptions& external) {
    const Container c = read_container(path);
    std::string architecture;
    try {
        architecture = c.metadata.at("architecture").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt detector handle " + path.string() + ": " + e.what());
    }
    if (parse_architecture(architecture) == Architecture::reference_mini) return ReferenceMiniHandle::load(path);
    return ExternalDetectorHandle::load(path, external);
}

}  // namespace thermoscope::detection
