#pragma once

#include <filesystem>

#include "thermoscope/tensor.hpp"

namespace thermoscope {

// An image is a rank-3 tensor (3, H, W) with values in [0, 1].
using Image = Tensor;

struct ImageSize {
    int width = 0;
    int height = 0;
};

// Loads an 8/16-bit PNG. Grayscale sources are replicated to three channels
// so thermal and visible frames share one representation.
Image load_image(const std::filesystem::path& path);

// Reads only the PNG header.
ImageSize probe_image_size(const std::filesystem::path& path);

// Writes an 8-bit RGB PNG (lossless). Values are clamped to [0, 1].
void save_png(const std::filesystem::path& path, const Image& image);

// Bilinear resampling with half-pixel centers.
Image resize_bilinear(const Image& image, int height, int width);

// Pads bottom/right by edge replication.
Image pad_replicate(const Image& image, int height, int width);
Image crop(const Image& image, int height, int width);

void check_image(const Image& image, const char* what);

}  // namespace thermoscope
