#include "thermoscope/data/voc.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "thermoscope/error.hpp"

namespace thermoscope::data {

namespace pt = boost::property_tree;

namespace {

long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

template <class T>
T required(const pt::ptree& node, const std::string& key) {
    auto child = node.get_optional<T>(key);
    if (!child) throw ParseError("VOC document missing required element <" + key + ">");
    return *child;
}

}  // namespace

std::string to_voc_xml(const LabeledImage& record) {
    validate(record);
    pt::ptree root;
    pt::ptree& ann = root.add_child("annotation", pt::ptree());
    const std::filesystem::path p(record.path);
    ann.put("folder", p.parent_path().filename().string());
    ann.put("filename", p.filename().string());
    ann.put("path", record.path);
    ann.put("image_id", record.image_id);
    ann.put("spectrum", to_string(record.spectrum));
    if (!record.pair_key.empty()) ann.put("pair_key", record.pair_key);
    ann.put("size.width", record.width);
    ann.put("size.height", record.height);
    ann.put("size.depth", record.spectrum == Spectrum::thermal ? 1 : 3);
    ann.put("segmented", 0);
    for (const auto& a : record.annotations) {
        pt::ptree obj;
        obj.put("name", a.label);
        obj.put("pose", "Unspecified");
        obj.put("truncated", 0);
        obj.put("difficult", a.difficult ? 1 : 0);
        obj.put("bndbox.xmin", round_half_up(a.box.x_min));
        obj.put("bndbox.ymin", round_half_up(a.box.y_min));
        obj.put("bndbox.xmax", round_half_up(a.box.x_max));
        obj.put("bndbox.ymax", round_half_up(a.box.y_max));
        ann.add_child("object", obj);
    }
    std::ostringstream os;
    pt::write_xml(os, root, pt::xml_writer_make_settings<std::string>(' ', 2, "utf-8"));
    return os.str();
}

LabeledImage from_voc_xml(const std::string& document) {
    pt::ptree root;
    try {
        std::istringstream is(document);
        pt::read_xml(is, root, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError(std::string("malformed VOC XML: ") + e.what());
    }
    auto ann_opt = root.get_child_optional("annotation");
    if (!ann_opt) throw ParseError("VOC document missing required element <annotation>");
    const pt::ptree& ann = *ann_opt;

    LabeledImage r;
    try {
        const auto filename = required<std::string>(ann, "filename");
        r.path = ann.get<std::string>("path", filename);
        r.image_id = ann.get<std::string>("image_id", std::filesystem::path(filename).stem().string());
        r.spectrum = parse_spectrum(ann.get<std::string>("spectrum", "thermal"));
        r.pair_key = ann.get<std::string>("pair_key", "");
        r.width = required<int>(ann, "size.width");
        r.height = required<int>(ann, "size.height");
        for (const auto& [key, node] : ann) {
            if (key != "object") continue;
            ObjectAnnotation a;
            a.label = required<std::string>(node, "name");
            a.difficult = node.get<int>("difficult", 0) != 0;
            a.box.x_min = required<double>(node, "bndbox.xmin");
            a.box.y_min = required<double>(node, "bndbox.ymin");
            a.box.x_max = required<double>(node, "bndbox.xmax");
            a.box.y_max = required<double>(node, "bndbox.ymax");
            r.annotations.push_back(std::move(a));
        }
    } catch (const pt::ptree_bad_data& e) {
        throw ParseError(std::string("VOC element with non-numeric value: ") + e.what());
    }
    validate(r);
    return r;
}

void write_voc_xml(const std::filesystem::path& path, const LabeledImage& record) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << to_voc_xml(record);
    if (!os) throw IoError("write failed: " + path.string());
}

LabeledImage read_voc_xml(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << is.rdbuf();
    return from_voc_xml(buffer.str());
}

}  // namespace thermoscope::data
