#include "thermoscope/detection/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "thermoscope/error.hpp"

namespace thermoscope::detection {

using nlohmann::json;

std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::faster_rcnn: return "faster-rcnn";
        case Architecture::ssd_300: return "ssd-300";
        case Architecture::ssd_512: return "ssd-512";
        case Architecture::reference_mini: return "reference-mini";
    }
    return "?";
}

std::string to_string(Backbone b) {
    switch (b) {
        case Backbone::resnet_101: return "resnet-101";
        case Backbone::vgg_16: return "vgg-16";
        case Backbone::mobilenet_v2: return "mobilenet-v2";
        case Backbone::efficientnet: return "efficientnet";
        case Backbone::mini: return "mini";
    }
    return "?";
}

Architecture parse_architecture(const std::string& s) {
    for (auto a : {Architecture::faster_rcnn, Architecture::ssd_300, Architecture::ssd_512,
                   Architecture::reference_mini}) {
        if (to_string(a) == s) return a;
    }
    throw ConfigError("unknown detector architecture '" + s +
                      "' (expected faster-rcnn, ssd-300, ssd-512 or reference-mini)");
}

Backbone parse_backbone(const std::string& s) {
    for (auto b : {Backbone::resnet_101, Backbone::vgg_16, Backbone::mobilenet_v2, Backbone::efficientnet,
                   Backbone::mini}) {
        if (to_string(b) == s) return b;
    }
    throw ConfigError("unknown detector backbone '" + s +
                      "' (expected resnet-101, vgg-16, mobilenet-v2, efficientnet or mini)");
}

const std::vector<std::pair<Architecture, Backbone>>& registered_combinations() {
    static const std::vector<std::pair<Architecture, Backbone>> pairs{
        {Architecture::faster_rcnn, Backbone::resnet_101}, {Architecture::ssd_300, Backbone::vgg_16},
        {Architecture::ssd_300, Backbone::mobilenet_v2},   {Architecture::ssd_300, Backbone::efficientnet},
        {Architecture::ssd_512, Backbone::vgg_16},         {Architecture::reference_mini, Backbone::mini}};
    return pairs;
}

bool is_registered(Architecture a, Backbone b) {
    const auto& pairs = registered_combinations();
    return std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) != pairs.end();
}

void DetectorSpec::validate() const {
    if (!is_registered(architecture, backbone)) {
        std::string valid;
        for (const auto& [a, b] : registered_combinations()) {
            valid += (valid.empty() ? "" : ", ") + ("(" + to_string(a) + ", " + to_string(b) + ")");
        }
        throw ConfigError("unregistered detector combination (" + to_string(architecture) + ", " +
                          to_string(backbone) + "); valid pairs: " + valid);
    }
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("detector learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("detector epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("detector batch_size must be >= 1");
    if (input_size < 32) throw ConfigError("detector input_size must be >= 32");
    if (class_set.empty()) throw ConfigError("detector class_set must not be empty");
    std::set<std::string> seen;
    for (const auto& c : class_set) {
        if (c.empty() || !seen.insert(c).second) throw ConfigError("detector class_set has an empty or repeated label");
    }
}

json DetectorSpec::to_json() const {
    return {{"architecture", to_string(architecture)},
            {"backbone", to_string(backbone)},
            {"learning_rate", learning_rate},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"class_set", class_set},
            {"input_size", input_size},
            {"seed", seed}};
}

DetectorSpec DetectorSpec::from_json(const json& j) {
    static const std::set<std::string> allowed{"architecture", "backbone",  "learning_rate", "epochs",
                                               "batch_size",   "class_set", "input_size",    "seed"};
    if (!j.is_object()) throw ConfigError("detector spec must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in detector spec");
    }
    try {
        DetectorSpec s;
        s.architecture = parse_architecture(j.at("architecture").get<std::string>());
        s.backbone = parse_backbone(j.at("backbone").get<std::string>());
        s.learning_rate = j.at("learning_rate").get<double>();
        s.epochs = j.at("epochs").get<int>();
        s.batch_size = j.at("batch_size").get<int>();
        s.class_set = j.at("class_set").get<std::vector<std::string>>();
        s.input_size = j.at("input_size").get<int>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("detector spec: ") + e.what());
    }
}

Protocol parse_protocol(const std::string& s) {
    if (s == "baseline") return Protocol::baseline;
    if (s == "odsc") return Protocol::odsc;
    if (s == "cdmt") return Protocol::cdmt;
    throw ConfigError("unknown training protocol '" + s + "' (expected baseline, odsc or cdmt)");
}

DetectorSpec paper_defaults(Architecture a, Backbone b, Protocol protocol) {
    DetectorSpec s;
    s.architecture = a;
    s.backbone = b;
    s.batch_size = 4;
    s.class_set = data::flir_classes();
    switch (a) {
        case Architecture::faster_rcnn: s.input_size = 600; break;
        case Architecture::ssd_300: s.input_size = 300; break;
        case Architecture::ssd_512: s.input_size = 512; break;
        case Architecture::reference_mini: s.input_size = 96; break;
    }
    if (a == Architecture::reference_mini) {
        s.learning_rate = 1e-3;
        s.epochs = 30;
    } else {
        s.epochs = 15;
        if (protocol == Protocol::cdmt) {
            s.learning_rate = (a == Architecture::ssd_300 && b == Backbone::efficientnet) ? 1e-4 : 1e-3;
            s.class_set = data::kaist_classes();
        } else if (a == Architecture::faster_rcnn || (a == Architecture::ssd_300 && b == Backbone::vgg_16)) {
            s.learning_rate = 1e-4;
        } else {
            s.learning_rate = 1e-3;
        }
    }
    s.validate();
    return s;
}

void validate(const Detection& d, const std::vector<std::string>& class_set, int image_width, int image_height) {
    const std::string where = "detection on " + d.image_id;
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
        throw ValidationError(where + ": confidence " + std::to_string(d.confidence) + " outside [0, 1]");
    }
    if (std::find(class_set.begin(), class_set.end(), d.label) == class_set.end()) {
        throw ValidationError(where + ": label '" + d.label + "' not in the class set");
    }
    if (!d.box.valid()) throw ValidationError(where + ": degenerate box");
    if (image_width > 0 && image_height > 0 && !d.box.within(image_width, image_height)) {
        throw ValidationError(where + ": box outside the image");
    }
}

json to_json(const Detection& d) {
    return {{"image_id", d.image_id},
            {"label", d.label},
            {"confidence", d.confidence},
            {"box", {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max}}};
}

Detection detection_from_json(const json& j) {
    try {
        Detection d;
        d.image_id = j.at("image_id").get<std::string>();
        d.label = j.at("label").get<std::string>();
        d.confidence = j.at("confidence").get<double>();
        const auto& b = j.at("box");
        if (!b.is_array() || b.size() != 4) throw ParseError("detection box must have 4 coordinates");
        d.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        return d;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed detection record: ") + e.what());
    }
}

void write_detections_jsonl(const std::filesystem::path& path, const std::vector<Detection>& detections) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write detections " + path.string());
    for (const auto& d : detections) out << to_json(d).dump() << '\n';
    if (!out) throw IoError("failed writing detections " + path.string());
}

std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read detections " + path.string());
    std::vector<Detection> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(detection_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace thermoscope::detection
