#include "thermoscope/detection/external.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>

#include "thermoscope/container.hpp"
#include "thermoscope/data/manifest.hpp"
#include "thermoscope/data/voc.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/image.hpp"

namespace thermoscope::detection {

using nlohmann::json;

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

std::filesystem::path job_dir(const ExternalDetectorOptions& options, const std::string& action) {
    static std::atomic<unsigned> counter{0};
    const auto base = options.work_dir.empty() ? std::filesystem::temp_directory_path() / "thermoscope-external"
                                               : options.work_dir;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    auto dir = base / (action + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

void require_command(const ExternalDetectorOptions& options, const DetectorSpec& spec) {
    if (options.command.empty()) {
        throw ConfigError("detector (" + to_string(spec.architecture) + ", " + to_string(spec.backbone) +
                          ") is provided externally; set detector.external_command");
    }
}

void run_job(const ExternalDetectorOptions& options, const std::filesystem::path& job_path, const json& job) {
    {
        std::ofstream out(job_path);
        if (!out) throw IoError("cannot write job file " + job_path.string());
        out << job.dump(2) << '\n';
    }
    const std::string cmd = options.command + " " + shell_quote(job_path.string());
    const int status = std::system(cmd.c_str());
    if (status != 0) {
        throw Error("external detector command failed (status " + std::to_string(status) + "): " + cmd);
    }
}

}  // namespace

ExternalDetectorAdapter::ExternalDetectorAdapter(DetectorSpec spec, ExternalDetectorOptions options)
    : spec_(std::move(spec)), options_(std::move(options)) {
    spec_.validate();
}

DetectorHandle ExternalDetectorAdapter::train(const data::DatasetManifest& train_set, DetectorTrainLog* log) const {
    require_command(options_, spec_);
    if (train_set.records.empty()) throw ValidationError("detector training: empty train split");
    const auto dir = job_dir(options_, "train");
    const auto voc_dir = dir / "voc";
    std::filesystem::create_directories(voc_dir);
    std::map<std::string, int> used;
    for (const auto& r : train_set.records) {
        std::string stem = r.image_id;
        std::replace_if(stem.begin(), stem.end(), [](char c) { return c == '/' || c == ':' || c == '\\'; }, '_');
        if (int n = used[stem]++; n > 0) stem += "_" + std::to_string(n);
        data::write_voc_xml(voc_dir / (stem + ".xml"), r);
    }
    data::save_manifest(dir / "manifest.json", train_set);
    const auto weights = dir / "weights";
    run_job(options_, dir / "job.json",
            {{"action", "train"},
             {"spec", spec_.to_json()},
             {"manifest", (dir / "manifest.json").string()},
             {"voc_dir", voc_dir.string()},
             {"weights", weights.string()}});
    if (!std::filesystem::exists(weights)) {
        throw IoError("external detector did not produce weights at " + weights.string());
    }
    if (log) log->warnings.push_back("training loss of external detectors is not reported to the toolkit");
    return std::make_shared<ExternalDetectorHandle>(spec_, options_, weights);
}

DetectorHandle ExternalDetectorAdapter::load(const std::filesystem::path& path) const {
    return ExternalDetectorHandle::load(path, options_);
}

ExternalDetectorHandle::ExternalDetectorHandle(DetectorSpec spec, ExternalDetectorOptions options,
                                               std::filesystem::path weights)
    : spec_(std::move(spec)), options_(std::move(options)), weights_(std::move(weights)) {}

std::vector<Detection> ExternalDetectorHandle::infer(const std::vector<data::LabeledImage>& images,
                                                     double score_threshold, InferStats* stats) const {
    require_command(options_, spec_);
    json listed = json::array();
    std::map<std::string, std::pair<int, int>> sizes;
    std::vector<std::string> order;
    for (const auto& r : images) {
        if (!std::filesystem::exists(r.path)) {
            if (stats) {
                ++stats->skipped_images;
                stats->warnings.push_back("skipped unreadable image " + r.path);
            }
            continue;
        }
        listed.push_back({{"image_id", r.image_id}, {"path", r.path}, {"width", r.width}, {"height", r.height}});
        sizes[r.image_id] = {r.width, r.height};
        order.push_back(r.image_id);
    }
    if (order.empty()) return {};
    const auto dir = job_dir(options_, "infer");
    const auto output = dir / "detections.jsonl";
    run_job(options_, dir / "job.json",
            {{"action", "infer"},
             {"spec", spec_.to_json()},
             {"weights", weights_.string()},
             {"images", listed},
             {"score_threshold", score_threshold},
             {"output", output.string()}});
    std::map<std::string, std::vector<Detection>> per_image;
    for (auto& d : read_detections_jsonl(output)) {
        const auto it = sizes.find(d.image_id);
        if (it == sizes.end()) throw ValidationError("external detector returned unknown image id " + d.image_id);
        validate(d, spec_.class_set, it->second.first, it->second.second);
        if (d.confidence >= score_threshold) per_image[d.image_id].push_back(std::move(d));
    }
    std::vector<Detection> out;
    for (const auto& id : order) {
        auto& dets = per_image[id];
        std::stable_sort(dets.begin(), dets.end(),
                         [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
        out.insert(out.end(), dets.begin(), dets.end());
    }
    return out;
}

void ExternalDetectorHandle::save(const std::filesystem::path& path) const {
    Container c;
    c.metadata = {{"kind", "detector"},
                  {"architecture", to_string(spec_.architecture)},
                  {"backbone", to_string(spec_.backbone)},
                  {"spec", spec_.to_json()},
                  {"external", {{"weights", std::filesystem::absolute(weights_).string()}}}};
    write_container(path, c);
}

std::shared_ptr<ExternalDetectorHandle> ExternalDetectorHandle::load(const std::filesystem::path& path,
                                                                     const ExternalDetectorOptions& options) {
    const Container c = read_container(path);
    try {
        if (c.metadata.at("kind").get<std::string>() != "detector" || !c.metadata.contains("external")) {
            throw IoError(path.string() + " is not an external detector handle");
        }
        return std::make_shared<ExternalDetectorHandle>(DetectorSpec::from_json(c.metadata.at("spec")), options,
                                                        c.metadata.at("external").at("weights").get<std::string>());
    } catch (const json::exception& e) {
        throw IoError("corrupt detector handle " + path.string() + ": " + e.what());
    }
}

}  // namespace thermoscope::detection
