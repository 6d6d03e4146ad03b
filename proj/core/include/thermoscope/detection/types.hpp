#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/data/types.hpp"

namespace thermoscope::detection {

enum class Architecture { faster_rcnn, ssd_300, ssd_512, reference_mini };
enum class Backbone { resnet_101, vgg_16, mobilenet_v2, efficientnet, mini };

std::string to_string(Architecture a);  // "faster-rcnn", "ssd-300", ...
std::string to_string(Backbone b);      // "resnet-101", "vgg-16", ...
Architecture parse_architecture(const std::string& s);
Backbone parse_backbone(const std::string& s);

// The six supported (architecture, backbone) pairs.
const std::vector<std::pair<Architecture, Backbone>>& registered_combinations();
bool is_registered(Architecture a, Backbone b);

struct DetectorSpec {
    Architecture architecture = Architecture::reference_mini;
    Backbone backbone = Backbone::mini;
    double learning_rate = 1e-3;
    int epochs = 30;
    int batch_size = 4;
    std::vector<std::string> class_set;
    int input_size = 96;  // square network input side in pixels
    std::uint64_t seed = 0;

    // ConfigError listing valid pairs for an unregistered combination.
    void validate() const;
    nlohmann::json to_json() const;
    static DetectorSpec from_json(const nlohmann::json& j);
    friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

// Which experiment a detector is trained for; learning rates differ.
enum class Protocol { baseline, odsc, cdmt };

Protocol parse_protocol(const std::string& s);

// Hyperparameters from the experimental setup. ODSC reuses the baseline
// configuration.
DetectorSpec paper_defaults(Architecture a, Backbone b, Protocol protocol = Protocol::baseline);

struct Detection {
    std::string image_id;
    data::BoundingBox box;
    std::string label;
    double confidence = 0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

// Confidence in [0, 1], label in class_set, box valid and (when the image
// size is known) inside the image.
void validate(const Detection& d, const std::vector<std::string>& class_set, int image_width = 0,
              int image_height = 0);

// {image_id, label, confidence, box: [x1, y1, x2, y2]} per line.
nlohmann::json to_json(const Detection& d);
Detection detection_from_json(const nlohmann::json& j);
void write_detections_jsonl(const std::filesystem::path& path, const std::vector<Detection>& detections);
std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path);

inline constexpr double kEvalScoreThreshold = 0.01;
inline constexpr double kDisplayScoreThreshold = 0.5;

}  // namespace thermoscope::detection
