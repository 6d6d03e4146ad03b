#pragma once

#include <filesystem>
#include <string>

#include "thermoscope/data/types.hpp"

namespace thermoscope::data {

// PASCAL-VOC annotation document. Coordinates are written as integers
// (rounded half-up). Two non-standard elements, <image_id> and <spectrum>,
// carry the fields VOC has no slot for; standard readers ignore them.
std::string to_voc_xml(const LabeledImage& record);

// Accepts any VOC file; missing <image_id> falls back to the filename stem
// and missing <spectrum> to thermal.
LabeledImage from_voc_xml(const std::string& document);

void write_voc_xml(const std::filesystem::path& path, const LabeledImage& record);
LabeledImage read_voc_xml(const std::filesystem::path& path);

}  // namespace thermoscope::data
