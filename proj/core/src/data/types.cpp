#include "thermoscope/data/types.hpp"

#include <set>
#include <sstream>

#include "thermoscope/error.hpp"

namespace thermoscope::data {

std::string to_string(Spectrum s) { return s == Spectrum::thermal ? "thermal" : "visible"; }

Spectrum parse_spectrum(const std::string& s) {
    if (s == "thermal") return Spectrum::thermal;
    if (s == "visible") return Spectrum::visible;
    throw ParseError("unknown spectrum '" + s + "' (expected thermal or visible)");
}

std::string to_string(SplitRole r) { return r == SplitRole::train ? "train" : "val"; }

SplitRole parse_split_role(const std::string& s) {
    if (s == "train") return SplitRole::train;
    if (s == "val") return SplitRole::val;
    throw ParseError("unknown split role '" + s + "' (expected train or val)");
}

std::vector<const LabeledImage*> DatasetManifest::records_in(SplitRole role) const {
    std::vector<const LabeledImage*> out;
    for (const auto& r : records) {
        auto it = split.find(r.image_id);
        if (it != split.end() && it->second == role) out.push_back(&r);
    }
    return out;
}

DatasetManifest DatasetManifest::subset(SplitRole role) const {
    DatasetManifest out;
    out.name = name + "/" + to_string(role);
    out.class_set = class_set;
    for (const auto* r : records_in(role)) {
        out.records.push_back(*r);
        out.split[r->image_id] = role;
    }
    return out;
}

const LabeledImage* DatasetManifest::find(const std::string& image_id) const {
    for (const auto& r : records)
        if (r.image_id == image_id) return &r;
    return nullptr;
}

bool DatasetManifest::has_class(const std::string& label) const {
    for (const auto& c : class_set)
        if (c == label) return true;
    return false;
}

const std::vector<std::string>& flir_classes() {
    static const std::vector<std::string> classes{"car", "bicycle", "person"};
    return classes;
}

const std::vector<std::string>& kaist_classes() {
    static const std::vector<std::string> classes{"person"};
    return classes;
}

void validate(const BoundingBox& box, int width, int height, const std::string& context) {
    if (!box.valid()) {
        std::ostringstream os;
        os << context << ": degenerate box (" << box.x_min << "," << box.y_min << "," << box.x_max << ","
           << box.y_max << ")";
        throw ValidationError(os.str());
    }
    if (!box.within(width, height)) {
        std::ostringstream os;
        os << context << ": box (" << box.x_min << "," << box.y_min << "," << box.x_max << "," << box.y_max
           << ") lies outside the " << width << "x" << height << " image";
        throw ValidationError(os.str());
    }
}

void validate(const LabeledImage& record, const std::vector<std::string>* class_set) {
    if (record.image_id.empty()) throw ValidationError("record with empty image_id");
    if (record.width <= 0 || record.height <= 0) {
        throw ValidationError(record.image_id + ": image size must be positive");
    }
    for (const auto& a : record.annotations) {
        validate(a.box, record.width, record.height, record.image_id);
        if (class_set) {
            bool known = false;
            for (const auto& c : *class_set) known = known || c == a.label;
            if (!known) throw ValidationError(record.image_id + ": label '" + a.label + "' outside the class set");
        }
    }
}

void validate(const DatasetManifest& manifest) {
    std::set<std::string> ids;
    for (const auto& r : manifest.records) {
        validate(r, &manifest.class_set);
        if (!ids.insert(r.image_id).second) throw ValidationError("duplicate image_id '" + r.image_id + "'");
        if (!manifest.split.contains(r.image_id)) {
            throw ValidationError("image_id '" + r.image_id + "' missing from the split");
        }
    }
    if (manifest.split.size() != manifest.records.size()) {
        for (const auto& entry : manifest.split)
            if (!ids.contains(entry.first)) {
                throw ValidationError("split names unknown image_id '" + entry.first + "'");
            }
    }
}

}  // namespace thermoscope::data
