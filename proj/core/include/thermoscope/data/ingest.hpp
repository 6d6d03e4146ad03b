#pragma once

#include <cstdint>
#include <filesystem>

#include "thermoscope/data/types.hpp"

namespace thermoscope::data {

// Split fractions of the standard distributions, used only when a tree ships
// no split files.
inline constexpr double kFlirTrainFraction = 8862.0 / 10228.0;
inline constexpr double kKaistTrainFraction = 76000.0 / 95000.0;

struct FlirOptions {
    std::vector<std::string> class_set = flir_classes();
    std::uint64_t split_seed = 0;
};

// Accepted layouts (COCO-style JSON index, the public FLIR release format):
//   <dir>/train/thermal_annotations.json + <dir>/val/thermal_annotations.json
//       standard split, taken from the directory
//   <dir>/thermal_annotations.json [+ <dir>/train.txt, <dir>/val.txt]
//       split files list image ids one per line; without them make_split
//       is applied with the standard train fraction
// Image paths resolve relative to the directory holding the index.
IngestResult parse_flir_annotations(const std::filesystem::path& source_dir, const FlirOptions& options = {});

struct KaistOptions {
    // Used when frames are not PNG (no cheap header probe).
    int frame_width = 320;
    int frame_height = 256;
    std::uint64_t split_seed = 0;
};

// Layout:
//   <dir>/annotations/<rel>/<frame>.txt     "person x y w h ..." per line,
//                                           '%' lines are comments
//   <dir>/images/<rel>/visible/<frame>.(png|jpg)
//   <dir>/images/<rel>/lwir/<frame>.(png|jpg)
//   <dir>/splits/{train,val}.txt            optional, "<rel>/<frame>" keys
// Produces one thermal and one visible record per frame sharing pair_key
// "<rel>/<frame>" and identical annotation lists.
IngestResult parse_kaist_annotations(const std::filesystem::path& source_dir, const KaistOptions& options = {});

}  // namespace thermoscope::data
