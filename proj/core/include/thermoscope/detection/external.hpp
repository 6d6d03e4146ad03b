#pragma once

#include "thermoscope/detection/detector.hpp"

namespace thermoscope::detection {

// Bridge to detector implementations that live outside this library (the
// Faster-RCNN and SSD variants). Each call writes a job file and runs
// `<command> <job.json>`; the program reads the job, does the work and
// writes its results where the job says.
//
// train job: {"action": "train", "spec": {...}, "manifest": <manifest.json>,
//             "voc_dir": <one VOC XML per record>, "weights": <output path>}
// infer job: {"action": "infer", "spec": {...}, "weights": <path>,
//             "images": [{"image_id", "path", "width", "height"}, ...],
//             "score_threshold": t, "output": <detections.jsonl>}
//
// A zero exit status and the promised output file are required.
class ExternalDetectorAdapter final : public DetectorAdapter {
public:
    ExternalDetectorAdapter(DetectorSpec spec, ExternalDetectorOptions options);

    const DetectorSpec& spec() const override { return spec_; }
    DetectorHandle train(const data::DatasetManifest& train_set, DetectorTrainLog* log) const override;
    DetectorHandle load(const std::filesystem::path& path) const override;

private:
    DetectorSpec spec_;
    ExternalDetectorOptions options_;
};

class ExternalDetectorHandle final : public TrainedDetector {
public:
    ExternalDetectorHandle(DetectorSpec spec, ExternalDetectorOptions options, std::filesystem::path weights);

    const DetectorSpec& spec() const override { return spec_; }
    std::vector<Detection> infer(const std::vector<data::LabeledImage>& images, double score_threshold,
                                 InferStats* stats = nullptr) const override;
    void save(const std::filesystem::path& path) const override;

    static std::shared_ptr<ExternalDetectorHandle> load(const std::filesystem::path& path,
                                                        const ExternalDetectorOptions& options);

private:
    DetectorSpec spec_;
    ExternalDetectorOptions options_;
    std::filesystem::path weights_;
};

}  // namespace thermoscope::detection
