#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "thermoscope/data/ingest.hpp"
#include "thermoscope/data/manifest.hpp"
#include "thermoscope/error.hpp"

namespace thermoscope::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kIndexName = "thermal_annotations.json";

json read_index(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("missing FLIR annotation index: " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ParseError("malformed FLIR annotation index " + path.string() + ": " + e.what());
    }
}

std::vector<std::string> read_id_list(const fs::path& path) {
    std::ifstream is(path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(is, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

// Appends the records of one COCO-style index to the manifest.
std::vector<std::string> ingest_index(const fs::path& index_path, const FlirOptions& options, DatasetManifest& m,
                                      IngestReport& report) {
    const json doc = read_index(index_path);
    const fs::path base = index_path.parent_path();

    std::map<long, std::string> category_names;
    for (const auto& cat : doc.value("categories", json::array())) {
        category_names[cat.at("id").get<long>()] = cat.at("name").get<std::string>();
    }

    std::map<long, std::size_t> by_coco_id;
    std::vector<std::string> ids;
    for (const auto& img : doc.value("images", json::array())) {
        LabeledImage r;
        const std::string file = img.value("file_name", std::string());
        r.image_id = fs::path(file).stem().string();
        try {
            if (file.empty()) throw ParseError("missing file_name");
            r.path = (base / file).string();
            r.width = img.at("width").get<int>();
            r.height = img.at("height").get<int>();
            if (r.width <= 0 || r.height <= 0) throw ParseError("non-positive image size");
            by_coco_id[img.at("id").get<long>()] = m.records.size();
        } catch (const std::exception& e) {
            throw ParseError("malformed FLIR image record '" + (r.image_id.empty() ? img.dump() : r.image_id) +
                             "' in " + index_path.string() + ": " + e.what());
        }
        r.spectrum = Spectrum::thermal;
        ids.push_back(r.image_id);
        m.records.push_back(std::move(r));
    }

    for (const auto& a : doc.value("annotations", json::array())) {
        long image_ref = 0;
        try {
            image_ref = a.at("image_id").get<long>();
        } catch (const json::exception&) {
            throw ParseError("annotation without image_id in " + index_path.string());
        }
        auto rec_it = by_coco_id.find(image_ref);
        if (rec_it == by_coco_id.end()) {
            throw ParseError("annotation references unknown image id " + std::to_string(image_ref) + " in " +
                             index_path.string());
        }
        LabeledImage& r = m.records[rec_it->second];
        std::string label;
        std::vector<double> bbox;
        try {
            const long cat = a.at("category_id").get<long>();
            auto it = category_names.find(cat);
            label = it != category_names.end() ? it->second : "category_" + std::to_string(cat);
            bbox = a.at("bbox").get<std::vector<double>>();
            if (bbox.size() != 4) throw ParseError("bbox must have 4 values");
        } catch (const std::exception& e) {
            throw ParseError("malformed annotation for image '" + r.image_id + "': " + e.what());
        }
        if (label == "dog") {
            ++report.dropped_dog;
            continue;
        }
        if (std::find(options.class_set.begin(), options.class_set.end(), label) == options.class_set.end()) {
            ++report.skipped_unknown_class;
            report.warnings.push_back(r.image_id + ": skipped label '" + label + "'");
            continue;
        }
        BoundingBox box{bbox[0], bbox[1], bbox[0] + bbox[2], bbox[1] + bbox[3]};
        BoundingBox clipped{std::clamp(box.x_min, 0.0, double(r.width)), std::clamp(box.y_min, 0.0, double(r.height)),
                            std::clamp(box.x_max, 0.0, double(r.width)), std::clamp(box.y_max, 0.0, double(r.height))};
        if (!clipped.valid()) {
            ++report.dropped_degenerate_boxes;
            report.warnings.push_back(r.image_id + ": dropped degenerate box");
            continue;
        }
        if (!(clipped == box)) {
            ++report.clipped_boxes;
            report.warnings.push_back(r.image_id + ": clipped box to image bounds");
        }
        r.annotations.push_back({clipped, label, a.value("iscrowd", 0) != 0});
    }
    return ids;
}

}  // namespace

IngestResult parse_flir_annotations(const fs::path& source_dir, const FlirOptions& options) {
    if (std::find(options.class_set.begin(), options.class_set.end(), "dog") != options.class_set.end()) {
        throw ConfigError("the dog class is not supported");
    }
    IngestResult out;
    DatasetManifest& m = out.manifest;
    m.name = "flir-adas";
    m.class_set = options.class_set;

    const fs::path train_index = source_dir / "train" / kIndexName;
    const fs::path val_index = source_dir / "val" / kIndexName;
    if (fs::exists(train_index) || fs::exists(val_index)) {
        for (const auto& id : ingest_index(train_index, options, m, out.report)) m.split[id] = SplitRole::train;
        for (const auto& id : ingest_index(val_index, options, m, out.report)) m.split[id] = SplitRole::val;
        validate(m);
        return out;
    }

    ingest_index(source_dir / kIndexName, options, m, out.report);
    const fs::path train_list = source_dir / "train.txt";
    const fs::path val_list = source_dir / "val.txt";
    if (fs::exists(train_list) && fs::exists(val_list)) {
        for (const auto& id : read_id_list(train_list)) m.split[id] = SplitRole::train;
        for (const auto& id : read_id_list(val_list)) m.split[id] = SplitRole::val;
        std::set<std::string> known;
        for (const auto& r : m.records) known.insert(r.image_id);
        std::erase_if(m.split, [&](const auto& e) { return !known.contains(e.first); });
    } else if (!m.records.empty()) {
        m = make_split(m, kFlirTrainFraction, options.split_seed);
    }
    validate(m);
    return out;
}

}  // namespace thermoscope::data
