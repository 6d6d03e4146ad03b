#include "thermoscope/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "thermoscope/error.hpp"

namespace thermoscope::eval {

using nlohmann::json;

json to_json(const EvalReport& report) {
    json classes = json::object();
    for (const auto& [name, c] : report.classes) {
        classes[name] = {{"ap", c.ap ? json(*c.ap) : json(nullptr)},
                         {"gt", c.gt},
                         {"tp", c.tp},
                         {"fp", c.fp},
                         {"fn", c.fn}};
    }
    return {{"classes", std::move(classes)},
            {"map", report.map},
            {"iou_threshold", report.iou_threshold},
            {"interpolation", to_string(report.interpolation)},
            {"excluded_classes", report.excluded_classes},
            {"tag", report.tag}};
}

EvalReport eval_report_from_json(const json& j) {
    try {
        EvalReport r;
        for (const auto& [name, c] : j.at("classes").items()) {
            ClassReport cr;
            if (!c.at("ap").is_null()) cr.ap = c.at("ap").get<double>();
            cr.gt = c.at("gt").get<std::size_t>();
            cr.tp = c.at("tp").get<std::size_t>();
            cr.fp = c.at("fp").get<std::size_t>();
            cr.fn = c.at("fn").get<std::size_t>();
            r.classes[name] = cr;
        }
        r.map = j.at("map").get<double>();
        r.iou_threshold = j.at("iou_threshold").get<double>();
        r.interpolation = parse_interpolation(j.at("interpolation").get<std::string>());
        r.excluded_classes = j.value("excluded_classes", std::vector<std::string>{});
        r.tag = j.value("tag", std::string{});
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed evaluation report: ") + e.what());
    }
}

void save_report(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    out << to_json(report).dump(2) << '\n';
    if (!out) throw IoError("failed writing report " + path.string());
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read report " + path.string());
    try {
        return eval_report_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

namespace {

std::string cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string format_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
    if (rows.empty()) return "";
    std::vector<std::string> classes;
    for (const auto& [_, r] : rows) {
        for (const auto& [name, c] : r.classes) {
            if (std::find(classes.begin(), classes.end(), name) == classes.end()) classes.push_back(name);
        }
    }
    std::vector<std::string> header{"Detector"};
    header.insert(header.end(), classes.begin(), classes.end());
    header.push_back("Average mAP");

    std::vector<std::vector<std::string>> table{header};
    for (const auto& [name, r] : rows) {
        std::vector<std::string> line{name.empty() ? r.tag : name};
        for (const auto& c : classes) {
            const auto it = r.classes.find(c);
            line.push_back(it == r.classes.end() || !it->second.ap ? "-" : cell(*it->second.ap));
        }
        line.push_back(cell(r.map));
        table.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : table) {
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    }
    std::ostringstream out;
    for (std::size_t row = 0; row < table.size(); ++row) {
        for (std::size_t i = 0; i < table[row].size(); ++i) {
            out << (i ? " | " : "") << pad(table[row][i], width[i]);
        }
        out << '\n';
        if (row == 0) {
            for (std::size_t i = 0; i < width.size(); ++i) out << (i ? "-+-" : "") << std::string(width[i], '-');
            out << '\n';
        }
    }
    const auto& first = rows.front().second;
    out << "IoU " << first.iou_threshold << ", " << to_string(first.interpolation) << " interpolation\n";
    for (const auto& [name, r] : rows) {
        out << (name.empty() ? r.tag : name) << " counts:";
        for (const auto& [c, cr] : r.classes) {
            out << "  " << c << " gt=" << cr.gt << " tp=" << cr.tp << " fp=" << cr.fp << " fn=" << cr.fn;
        }
        if (!r.excluded_classes.empty()) {
            out << "  (excluded, no ground truth:";
            for (const auto& c : r.excluded_classes) out << ' ' << c;
            out << ')';
        }
        out << '\n';
    }
    return out.str();
}

std::string format_table(const EvalReport& report, const std::string& row_name) {
    return format_table({{row_name, report}});
}

}  // namespace thermoscope::eval
