#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "thermoscope/data/types.hpp"
#include "thermoscope/image.hpp"
#include "thermoscope/training/checkpoint.hpp"

namespace thermoscope::training {

// Output has content_image's spatial size, values in [0, 1].
Image stylize_image(const Image& content_image, const Image& style_image, const Checkpoint& checkpoint);

struct StylizeOptions {
    // Style images are resized to this square size first; 0 keeps them as is.
    int style_size = 256;
    // Worker threads; results are merged in record order either way.
    int workers = 1;
};

struct StylizeResult {
    data::DatasetManifest manifest;
    std::map<std::string, std::string> assignments;  // content image_id -> style image_id
};

// Style image for one content record, a pure function of (seed, image_id).
std::size_t assign_style(std::uint64_t seed, const std::string& image_id, std::size_t style_count);

// Filesystem-safe file stem for an image id.
std::string sanitize_id(const std::string& image_id);

// Writes <out_dir>/<sanitized id>.png for every record. Annotations, split
// membership and spectrum are carried over unchanged; only paths move.
StylizeResult stylize_dataset(const data::DatasetManifest& manifest, const data::DatasetManifest& style_source,
                              const Checkpoint& checkpoint, const std::filesystem::path& out_dir, std::uint64_t seed,
                              const StylizeOptions& options = {});

}  // namespace thermoscope::training
