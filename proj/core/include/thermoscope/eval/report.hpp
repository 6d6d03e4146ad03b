#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/eval/voc_eval.hpp"

namespace thermoscope::eval {

// {classes: {name: {ap, gt, tp, fp, fn}}, map, iou_threshold, interpolation,
//  excluded_classes, tag}; an undefined AP is null.
nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

// Stable bytes for a given report (sorted keys, fixed indentation).
void save_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report(const std::filesystem::path& path);

// One row per (name, report): per-class AP columns then "Average mAP",
// followed by the per-class counts.
std::string format_table(const std::vector<std::pair<std::string, EvalReport>>& rows);
std::string format_table(const EvalReport& report, const std::string& row_name = "");

}  // namespace thermoscope::eval
