#include "thermoscope/data/manifest.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "thermoscope/error.hpp"
#include "thermoscope/random.hpp"

namespace thermoscope::data {

using nlohmann::json;

nlohmann::json to_json(const DatasetManifest& manifest) {
    json records = json::array();
    for (const auto& r : manifest.records) {
        json anns = json::array();
        for (const auto& a : r.annotations) {
            anns.push_back({{"label", a.label},
                            {"difficult", a.difficult},
                            {"box", {a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max}}});
        }
        json rec = {{"image_id", r.image_id},   {"path", r.path},
                    {"width", r.width},         {"height", r.height},
                    {"spectrum", to_string(r.spectrum)}, {"annotations", std::move(anns)}};
        if (!r.pair_key.empty()) rec["pair_key"] = r.pair_key;
        records.push_back(std::move(rec));
    }
    json split = json::object();
    for (const auto& [id, role] : manifest.split) split[id] = to_string(role);
    return {{"schema_version", kManifestSchemaVersion},
            {"name", manifest.name},
            {"class_set", manifest.class_set},
            {"records", std::move(records)},
            {"split", std::move(split)}};
}

DatasetManifest manifest_from_json(const nlohmann::json& doc) {
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != kManifestSchemaVersion) {
            throw ParseError("unsupported manifest schema_version " + std::to_string(version));
        }
        DatasetManifest m;
        m.name = doc.at("name").get<std::string>();
        m.class_set = doc.at("class_set").get<std::vector<std::string>>();
        for (const auto& rec : doc.at("records")) {
            LabeledImage r;
            r.image_id = rec.at("image_id").get<std::string>();
            r.path = rec.at("path").get<std::string>();
            r.width = rec.at("width").get<int>();
            r.height = rec.at("height").get<int>();
            r.spectrum = parse_spectrum(rec.at("spectrum").get<std::string>());
            r.pair_key = rec.value("pair_key", std::string());
            for (const auto& a : rec.at("annotations")) {
                const auto box = a.at("box").get<std::vector<double>>();
                if (box.size() != 4) throw ParseError(r.image_id + ": box must have 4 coordinates");
                r.annotations.push_back({BoundingBox{box[0], box[1], box[2], box[3]}, a.at("label").get<std::string>(),
                                         a.value("difficult", false)});
            }
            m.records.push_back(std::move(r));
        }
        for (const auto& [id, role] : doc.at("split").items()) m.split[id] = parse_split_role(role.get<std::string>());
        validate(m);
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed manifest: ") + e.what());
    }
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw IoError("cannot write manifest " + path.string());
    os << to_json(manifest).dump(2) << '\n';
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read manifest " + path.string());
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return manifest_from_json(doc);
}

DatasetManifest make_split(const DatasetManifest& manifest, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie strictly between 0 and 1");
    }
    if (manifest.records.empty()) throw ValidationError("make_split: manifest '" + manifest.name + "' is empty");

    // Group records by pair key; unpaired records form singleton groups.
    std::vector<std::vector<std::string>> groups;
    std::map<std::string, std::size_t> group_of_pair;
    for (const auto& r : manifest.records) {
        if (r.pair_key.empty()) {
            groups.push_back({r.image_id});
            continue;
        }
        auto [it, inserted] = group_of_pair.try_emplace(r.pair_key, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(r.image_id);
    }

    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = SeedStreams(seed).stream("split");
    shuffle(order, rng);

    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(groups.size())));
    DatasetManifest out = manifest;
    out.split.clear();
    for (std::size_t k = 0; k < order.size(); ++k) {
        const SplitRole role = k < n_train ? SplitRole::train : SplitRole::val;
        for (const auto& id : groups[order[k]]) out.split[id] = role;
    }
    return out;
}

}  // namespace thermoscope::data
