// SPDX-License-Identifier: Apache-2.0

#include "trifuse/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include <png.h>

#include "trifuse/binio.hpp"
#include "trifuse/error.hpp"

namespace trifuse {

ImageF::ImageF(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
    if (channels < 1 || height < 1 || width < 1)
        throw parameter_error("image dimensions must be >= 1");
    data_.assign(size_t(channels) * height * width, fill);
}

uint8_t quantize8(float v) {
    return uint8_t(std::nearbyintf(clamp01(v) * 255.0f));
}

ImageF quantize_unit(const ImageF& img) {
    ImageF out = img;
    for (float& v : out.values()) v = float(quantize8(v)) / 255.0f;
    return out;
}

void write_imagef(const ImageF& img, const std::filesystem::path& path) {
    if (img.size() == 0) throw structural_error("write_imagef: empty image");
    binary_writer out(path);
    out.magic("IMGF");
    out.u32(1);
    out.u32(uint32_t(img.channels()));
    out.u32(uint32_t(img.height()));
    out.u32(uint32_t(img.width()));
    out.f32_array(img.values());
    out.finish();
}

ImageF read_imagef(const std::filesystem::path& path) {
    binary_reader in(path);
    in.expect_magic("IMGF");
    in.expect_version(1);
    uint32_t channels = in.u32("channel count");
    uint32_t height = in.u32("height");
    uint32_t width = in.u32("width");
    if (channels < 1 || channels > (1u << 12) || height < 1 || height > (1u << 16) ||
        width < 1 || width > (1u << 16))
        throw format_error(in.path() + ": implausible dimensions at byte 8");
    ImageF img(static_cast<int>(channels), static_cast<int>(height), static_cast<int>(width));
    in.f32_array(img.values(), "pixel payload");
    return img;
}

namespace {

std::vector<uint8_t> to_rgb8(const ImageF& rgb) {
    if (rgb.channels() != 3)
        throw structural_error("8-bit image output needs a 3-channel raster, got " +
                               std::to_string(rgb.channels()));
    std::vector<uint8_t> bytes(size_t(rgb.height()) * rgb.width() * 3);
    size_t k = 0;
    for (int y = 0; y < rgb.height(); y++)
        for (int x = 0; x < rgb.width(); x++)
            for (int c = 0; c < 3; c++) bytes[k++] = quantize8(rgb.at(c, y, x));
    return bytes;
}

ImageF from_rgb8(const std::vector<uint8_t>& bytes, int height, int width) {
    ImageF img(3, height, width);
    size_t k = 0;
    for (int y = 0; y < height; y++)
        for (int x = 0; x < width; x++)
            for (int c = 0; c < 3; c++) img.at(c, y, x) = float(bytes[k++]) / 255.0f;
    return img;
}

void write_ppm(const std::vector<uint8_t>& bytes, int height, int width,
               const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << "P6\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              std::streamsize(bytes.size()));
    if (!out) throw io_error("write failed: " + path.string());
}

ImageF read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    std::string magic;
    int width = 0, height = 0, maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P6") throw format_error(path.string() + ": not a binary P6 file");
    if (width < 1 || height < 1) throw format_error(path.string() + ": bad dimensions");
    if (maxval != 255) throw format_error(path.string() + ": only maxval 255 is supported");
    in.get();  // single whitespace byte before the payload
    std::vector<uint8_t> bytes(size_t(width) * height * 3);
    in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
    if (size_t(in.gcount()) != bytes.size())
        throw format_error(path.string() + ": truncated pixel payload");
    return from_rgb8(bytes, height, width);
}

void write_png(const std::vector<uint8_t>& bytes, int height, int width,
               const std::filesystem::path& path) {
    std::vector<png_bytep> rows(static_cast<size_t>(height));
    for (int y = 0; y < height; y++)
        rows[y] = const_cast<png_bytep>(bytes.data() + size_t(y) * width * 3);

    FILE* file = std::fopen(path.string().c_str(), "wb");
    if (!file) throw io_error("cannot open for writing: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(file);
        throw io_error("png write failed: " + path.string());
    }
    png_init_io(png, file);
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(file) != 0) throw io_error("write failed: " + path.string());
}

ImageF read_png(const std::filesystem::path& path) {
    FILE* file = std::fopen(path.string().c_str(), "rb");
    if (!file) throw io_error("cannot open for reading: " + path.string());

    std::vector<uint8_t> bytes;
    std::vector<png_bytep> rows;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(file);
        throw format_error("png read failed: " + path.string());
    }
    png_init_io(png, file);
    png_read_info(png, info);
    // Normalize every input layout to 8-bit RGB.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    int width = int(png_get_image_width(png, info));
    int height = int(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3 || png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(file);
        throw format_error(path.string() + ": unsupported png layout");
    }
    bytes.resize(size_t(width) * height * 3);
    rows.resize(size_t(height));
    for (int y = 0; y < height; y++) rows[y] = bytes.data() + size_t(y) * width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(file);
    return from_rgb8(bytes, height, width);
}

enum class image_kind { png, ppm };

image_kind kind_for(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (char& c : ext) c = char(std::tolower(c));
    if (ext == ".png") return image_kind::png;
    if (ext == ".ppm") return image_kind::ppm;
    throw parameter_error("unsupported image extension \"" + ext + "\" (use .png or .ppm): " +
                          path.string());
}

}  // namespace

void write_rgb8(const ImageF& rgb, const std::filesystem::path& path) {
    std::vector<uint8_t> bytes = to_rgb8(rgb);
    if (kind_for(path) == image_kind::png)
        write_png(bytes, rgb.height(), rgb.width(), path);
    else
        write_ppm(bytes, rgb.height(), rgb.width(), path);
}

ImageF read_rgb8(const std::filesystem::path& path) {
    return kind_for(path) == image_kind::png ? read_png(path) : read_ppm(path);
}

}  // namespace trifuse
