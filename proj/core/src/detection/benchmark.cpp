#include "thermoscope/detection/benchmark.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "thermoscope/error.hpp"

namespace thermoscope::detection {

nlohmann::json FpsReport::to_json() const {
    return {{"images", images},     {"warmup", warmup},     {"runs", run_seconds.size()},
            {"run_seconds", run_seconds}, {"mean_fps", mean_fps}, {"std_fps", std_fps},
            {"hardware", hardware}, {"note", note}};
}

std::string hardware_descriptor() {
    std::string model = "unknown cpu";
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            if (const auto colon = line.find(':'); colon != std::string::npos) {
                model = line.substr(line.find_first_not_of(' ', colon + 1));
            }
            break;
        }
    }
    return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
}

FpsReport benchmark_fps(const TrainedDetector& handle, const std::vector<data::LabeledImage>& images, int warmup,
                        int runs) {
    if (images.empty()) throw ValidationError("benchmark: empty image list");
    if (runs < 1) throw ConfigError("benchmark: runs must be >= 1");
    if (warmup < 0) throw ConfigError("benchmark: warmup must be >= 0");
    const double threshold = kDisplayScoreThreshold;
    for (int i = 0; i < warmup; ++i) handle.infer(images, threshold);

    FpsReport report;
    report.images = images.size();
    report.warmup = warmup;
    std::vector<double> fps;
    for (int i = 0; i < runs; ++i) {
        const auto start = std::chrono::steady_clock::now();
        InferStats stats;
        handle.infer(images, threshold, &stats);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (stats.skipped_images == images.size()) throw IoError("benchmark: no readable images");
        report.run_seconds.push_back(seconds);
        fps.push_back(static_cast<double>(images.size() - stats.skipped_images) / std::max(seconds, 1e-9));
    }
    double mean = 0.0;
    for (double f : fps) mean += f;
    mean /= static_cast<double>(fps.size());
    double var = 0.0;
    for (double f : fps) var += (f - mean) * (f - mean);
    report.mean_fps = mean;
    report.std_fps = fps.size() > 1 ? std::sqrt(var / static_cast<double>(fps.size() - 1)) : 0.0;
    report.hardware = hardware_descriptor();
    report.note = "single-process CPU timing including image decode; " + to_string(handle.spec().architecture) +
                  "/" + to_string(handle.spec().backbone) + " at input " + std::to_string(handle.spec().input_size);
    return report;
}

}  // namespace thermoscope::detection
