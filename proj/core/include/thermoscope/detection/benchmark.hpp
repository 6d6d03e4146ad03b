#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/detection/detector.hpp"

namespace thermoscope::detection {

struct FpsReport {
    std::size_t images = 0;
    int warmup = 0;
    std::vector<double> run_seconds;  // one per timed run, whole image list
    double mean_fps = 0;
    double std_fps = 0;
    std::string hardware;
    std::string note;

    nlohmann::json to_json() const;
};

// "<cpu model>, <n> hardware threads"
std::string hardware_descriptor();

// Timed runs include image decoding, as in a deployed pipeline.
FpsReport benchmark_fps(const TrainedDetector& handle, const std::vector<data::LabeledImage>& images, int warmup,
                        int runs);

}  // namespace thermoscope::detection
