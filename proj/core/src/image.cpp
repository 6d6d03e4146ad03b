#include "thermoscope/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "thermoscope/error.hpp"

namespace thermoscope {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError(std::string("cannot open image ") + path.string());
    return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw IoError(std::string("libpng: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

ImageSize probe_image_size(const std::filesystem::path& path) {
    auto f = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw IoError("not a PNG file: " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    ImageSize size;
    try {
        png_init_io(png, f.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        size.width = static_cast<int>(png_get_image_width(png, info));
        size.height = static_cast<int>(png_get_image_height(png, info));
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return size;
}

Image load_image(const std::filesystem::path& path) {
    auto f = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw IoError("not a PNG file: " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    Image out;
    try {
        png_init_io(png, f.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        const auto width = png_get_image_width(png, info);
        const auto height = png_get_image_height(png, info);
        const int color = png_get_color_type(png, info);
        const int depth = png_get_bit_depth(png, info);

        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        if (depth == 16) png_set_strip_16(png);
        png_set_strip_alpha(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
        png_read_update_info(png, info);

        const std::size_t rowbytes = png_get_rowbytes(png, info);
        std::vector<unsigned char> buffer(rowbytes * height);
        std::vector<png_bytep> rows(height);
        for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
        png_read_image(png, rows.data());

        out = Image::chw(3, static_cast<int>(height), static_cast<int>(width));
        for (png_uint_32 y = 0; y < height; ++y)
            for (png_uint_32 x = 0; x < width; ++x)
                for (int c = 0; c < 3; ++c)
                    out.at(c, static_cast<int>(y), static_cast<int>(x)) = rows[y][x * 3 + c] / 255.0;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void save_png(const std::filesystem::path& path, const Image& image) {
    check_image(image, "save_png");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot write image " + path.string());
    const int h = image.height();
    const int w = image.width();
    std::vector<unsigned char> buffer(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
                buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, f.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < h; ++y) png_write_row(png, buffer.data() + static_cast<std::size_t>(y) * w * 3);
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

Image resize_bilinear(const Image& image, int height, int width) {
    if (height < 1 || width < 1) throw DimensionError("resize target must be positive");
    if (image.height() == height && image.width() == width) return image;
    const int c = image.channels();
    const int ih = image.height();
    const int iw = image.width();
    Image out = Image::chw(c, height, width);
    const double sy = static_cast<double>(ih) / height;
    const double sx = static_cast<double>(iw) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(ih - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, ih - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(iw - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, iw - 1);
            const double wx = fx - x0;
            for (int ch = 0; ch < c; ++ch) {
                const double top = image.at(ch, y0, x0) * (1 - wx) + image.at(ch, y0, x1) * wx;
                const double bot = image.at(ch, y1, x0) * (1 - wx) + image.at(ch, y1, x1) * wx;
                out.at(ch, y, x) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return out;
}

Image pad_replicate(const Image& image, int height, int width) {
    if (height < image.height() || width < image.width()) throw DimensionError("pad target smaller than image");
    if (height == image.height() && width == image.width()) return image;
    Image out = Image::chw(image.channels(), height, width);
    for (int c = 0; c < image.channels(); ++c)
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                out.at(c, y, x) = image.at(c, std::min(y, image.height() - 1), std::min(x, image.width() - 1));
    return out;
}

Image crop(const Image& image, int height, int width) {
    if (height > image.height() || width > image.width()) throw DimensionError("crop target larger than image");
    if (height == image.height() && width == image.width()) return image;
    Image out = Image::chw(image.channels(), height, width);
    for (int c = 0; c < image.channels(); ++c)
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) out.at(c, y, x) = image.at(c, y, x);
    return out;
}

void check_image(const Image& image, const char* what) {
    if (image.rank() != 3 || image.channels() != 3 || image.height() < 1 || image.width() < 1) {
        throw DimensionError(std::string(what) + ": expected a 3xHxW image, got " + shape_string(image.shape()));
    }
    if (!image.all_finite()) throw NumericError(std::string(what) + ": non-finite pixel values");
}

}  // namespace thermoscope
