#include <algorithm>
#include <fstream>
#include <sstream>

#include "thermoscope/data/ingest.hpp"
#include "thermoscope/data/manifest.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/image.hpp"

namespace thermoscope::data {

namespace fs = std::filesystem;

namespace {

std::optional<fs::path> find_frame(const fs::path& dir, const std::string& stem) {
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
        fs::path p = dir / (stem + ext);
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

ImageSize frame_size(const fs::path& path, const KaistOptions& options) {
    if (path.extension() == ".png") return probe_image_size(path);
    return {options.frame_width, options.frame_height};
}

std::vector<std::string> read_keys(const fs::path& path) {
    std::ifstream is(path);
    std::vector<std::string> keys;
    std::string line;
    while (std::getline(is, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) keys.push_back(line);
    }
    return keys;
}

}  // namespace

IngestResult parse_kaist_annotations(const fs::path& source_dir, const KaistOptions& options) {
    const fs::path ann_root = source_dir / "annotations";
    if (!fs::is_directory(ann_root)) throw ParseError("missing KAIST annotation directory: " + ann_root.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(ann_root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    IngestResult out;
    DatasetManifest& m = out.manifest;
    m.name = "kaist-multispectral";
    m.class_set = kaist_classes();

    for (const auto& file : files) {
        const fs::path rel = fs::relative(file, ann_root);
        const std::string stem = file.stem().string();
        const fs::path rel_dir = rel.parent_path();
        const std::string key = (rel_dir / stem).generic_string();

        const fs::path image_dir = source_dir / "images" / rel_dir;
        const auto visible = find_frame(image_dir / "visible", stem);
        const auto thermal = find_frame(image_dir / "lwir", stem);
        if (!visible || !thermal) {
            throw ValidationError("unpaired KAIST frame '" + key + "': missing " +
                                  (!visible ? std::string("visible") : std::string("lwir")) + " image");
        }
        const ImageSize size = frame_size(*thermal, options);

        std::vector<ObjectAnnotation> anns;
        std::ifstream is(file);
        if (!is) throw ParseError("cannot read KAIST annotation " + file.string());
        std::string line;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (line.empty() || line[0] == '%') continue;
            std::istringstream ls(line);
            std::string label;
            double x = 0, y = 0, w = 0, h = 0;
            if (!(ls >> label)) continue;
            if (!(ls >> x >> y >> w >> h)) {
                throw ParseError("malformed KAIST annotation line " + std::to_string(line_no) + " for frame '" + key +
                                 "'");
            }
            if (label != "person") {
                ++out.report.skipped_unknown_class;
                out.report.warnings.push_back(key + ": skipped label '" + label + "'");
                continue;
            }
            BoundingBox box{x, y, x + w, y + h};
            BoundingBox clipped{std::clamp(box.x_min, 0.0, double(size.width)),
                                std::clamp(box.y_min, 0.0, double(size.height)),
                                std::clamp(box.x_max, 0.0, double(size.width)),
                                std::clamp(box.y_max, 0.0, double(size.height))};
            if (!clipped.valid()) {
                ++out.report.dropped_degenerate_boxes;
                continue;
            }
            if (!(clipped == box)) ++out.report.clipped_boxes;
            anns.push_back({clipped, label, false});
        }

        LabeledImage t{key + ":thermal", thermal->string(), size.width, size.height, Spectrum::thermal, anns, key};
        LabeledImage v{key + ":visible", visible->string(), size.width, size.height, Spectrum::visible, anns, key};
        m.records.push_back(std::move(t));
        m.records.push_back(std::move(v));
    }

    const fs::path train_list = source_dir / "splits" / "train.txt";
    const fs::path val_list = source_dir / "splits" / "val.txt";
    if (fs::exists(train_list) && fs::exists(val_list)) {
        std::map<std::string, SplitRole> by_key;
        for (const auto& k : read_keys(train_list)) by_key[k] = SplitRole::train;
        for (const auto& k : read_keys(val_list)) by_key[k] = SplitRole::val;
        for (const auto& r : m.records) {
            auto it = by_key.find(r.pair_key);
            if (it == by_key.end()) throw ValidationError("frame '" + r.pair_key + "' is in neither split file");
            m.split[r.image_id] = it->second;
        }
    } else if (!m.records.empty()) {
        m = make_split(m, kKaistTrainFraction, options.split_seed);
    }
    validate(m);
    return out;
}

}  // namespace thermoscope::data
