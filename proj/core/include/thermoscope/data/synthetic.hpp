#pragma once

#include <cstdint>
#include <filesystem>

#include "thermoscope/data/types.hpp"
#include "thermoscope/image.hpp"

namespace thermoscope::data {

// Geometric stand-ins for the three FLIR classes with a deliberate domain
// shift between the two spectra: thermal frames show warm (bright) objects
// on a dark noisy background, visible frames show dark coloured objects on
// a bright textured background. Both renderings of a frame share one layout,
// so annotations are identical across the pair.
struct ToyFrame {
    Image thermal;
    Image visible;
    std::vector<ObjectAnnotation> annotations;
};

struct ToyCorpusOptions {
    int frames = 20;
    int width = 96;
    int height = 96;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    // Which classes are drawn in every frame (one instance each).
    std::vector<std::string> classes = flir_classes();
};

ToyFrame render_toy_frame(const ToyCorpusOptions& options, int index);

struct ToyCorpus {
    DatasetManifest thermal;  // thermal records only
    DatasetManifest visible;  // visible records only
    DatasetManifest paired;   // both spectra, pair_key set, shared split
};

// Writes <out>/thermal/*.png, <out>/visible/*.png and the three manifests
// (thermal.json, visible.json, paired.json).
ToyCorpus write_toy_corpus(const std::filesystem::path& out_dir, const ToyCorpusOptions& options);

}  // namespace thermoscope::data
