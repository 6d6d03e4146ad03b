#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "thermoscope/pipeline/config.hpp"
#include "thermoscope/pipeline/run_record.hpp"

namespace thermoscope::pipeline {

// Every run writes into config.output_dir: report.json (the EvalReport
// alone, stable bytes) and run_record.json (the full record). Progress
// lines go to log when given.

// Train on the thermal train split, evaluate on the thermal val split.
RunRecord run_baseline(const PipelineConfig& config, std::ostream* log = nullptr);
// Stylize the thermal train split with visible styles, train on it,
// evaluate on the untouched thermal val split.
RunRecord run_odsc(const PipelineConfig& config, std::ostream* log = nullptr);
// Thermal-trained detector evaluated on stylized val images.
RunRecord run_sanity_swap(const PipelineConfig& config, std::ostream* log = nullptr);
// Train on visible; evaluate on thermal val (first) and on thermally
// styled visible val (second).
std::pair<RunRecord, RunRecord> run_cdmt(const PipelineConfig& config, std::ostream* log = nullptr);
// VOC XML pseudo-labels for an unlabeled thermal directory.
RunRecord run_weak_label(const PipelineConfig& config, std::ostream* log = nullptr);
RunRecord run_bench(const PipelineConfig& config, std::ostream* log = nullptr);
RunRecord run_style_train(const PipelineConfig& config, std::ostream* log = nullptr);
RunRecord run_stylize(const PipelineConfig& config, std::ostream* log = nullptr);
RunRecord run_eval(const PipelineConfig& config, std::ostream* log = nullptr);

// Dispatches on config.pipeline after check_launch().
std::vector<RunRecord> run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

// Human-readable summary: the report table(s), or the headline numbers of
// non-evaluating runs.
std::string summarize(const std::vector<RunRecord>& records);

// Split hygiene: throws ValidationError when an evaluation record shares an
// image id (or a non-empty pair key) with any training input.
void check_disjoint(const std::vector<const data::LabeledImage*>& training_inputs,
                    const std::vector<const data::LabeledImage*>& evaluation);

}  // namespace thermoscope::pipeline
