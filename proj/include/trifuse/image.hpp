// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "trifuse/math.hpp"

namespace trifuse {

// Planar float raster, channel-major: value (c, y, x) lives at
// data[(c * height + y) * width + x]. RGB rasters use c = 0,1,2.
class ImageF {
  public:
    ImageF() = default;
    ImageF(int channels, int height, int width, float fill = 0);

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    size_t size() const { return data_.size(); }

    float& at(int c, int y, int x) { return data_[(size_t(c) * height_ + y) * width_ + x]; }
    float at(int c, int y, int x) const { return data_[(size_t(c) * height_ + y) * width_ + x]; }

    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }
    std::span<float> channel(int c) {
        return std::span<float>(data_).subspan(size_t(c) * height_ * width_,
                                               size_t(height_) * width_);
    }
    std::span<const float> channel(int c) const {
        return std::span<const float>(data_).subspan(size_t(c) * height_ * width_,
                                                     size_t(height_) * width_);
    }

    bool same_shape(const ImageF& other) const {
        return channels_ == other.channels_ && height_ == other.height_ &&
               width_ == other.width_;
    }

  private:
    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

// Round-half-even quantization of a unit-range value to one byte.
uint8_t quantize8(float v);

// Snaps every value to the nearest 8-bit level (x -> quantize8(x) / 255).
ImageF quantize_unit(const ImageF& img);

// Float raster container: magic "IMGF", u32 version (1), u32 C, u32 H, u32 W,
// then C*H*W little-endian floats in planar order. Round-trips bit-exactly.
void write_imagef(const ImageF& img, const std::filesystem::path& path);
ImageF read_imagef(const std::filesystem::path& path);

// 8-bit image I/O. The extension picks the container: ".png" or ".ppm"
// (binary P6). Writing expects a 3-channel raster with values in [0,1] and
// quantizes round-half-even; reading returns values scaled back to [0,1].
void write_rgb8(const ImageF& rgb, const std::filesystem::path& path);
ImageF read_rgb8(const std::filesystem::path& path);

}  // namespace trifuse
