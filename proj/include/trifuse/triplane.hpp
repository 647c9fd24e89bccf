// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "trifuse/math.hpp"

namespace trifuse {

// Plane indices follow the EG3D convention: the xy plane is indexed by the
// world (x, y) coordinates, xz by (x, z) and yz by (y, z).
enum plane_id { plane_xy = 0, plane_xz = 1, plane_yz = 2 };

// Orthographic projection of a world point onto one plane; `a` feeds the
// texel column (u) and `b` the texel row (v). Sampling and visibility
// rasterization share this so their mappings cannot drift apart.
inline void plane_coords(plane_id p, float x, float y, float z, float& a, float& b) {
    switch (p) {
        case plane_xy: a = x; b = y; break;
        case plane_xz: a = x; b = z; break;
        default: a = y; b = z; break;
    }
}

/// Three square feature planes over the [-0.5, 0.5]^3 volume.
///
/// Texels are stored channel-interleaved per plane, ((v * R + u) * C + c),
/// so a bilinear tap touches four contiguous channel runs. The on-disk
/// format is channel-planar; the readers/writers transpose.
class Triplane {
  public:
    Triplane() = default;
    Triplane(int channels, int resolution);

    int channels() const { return channels_; }
    int resolution() const { return resolution_; }
    bool empty() const { return channels_ == 0; }

    float& at(int plane, int channel, int row, int col) {
        return planes_[plane][(static_cast<size_t>(row) * resolution_ + col) * channels_ + channel];
    }
    float at(int plane, int channel, int row, int col) const {
        return planes_[plane][(static_cast<size_t>(row) * resolution_ + col) * channels_ + channel];
    }
    // All channels of one texel, contiguous.
    const float* texel(int plane, int row, int col) const {
        return planes_[plane].data() + (static_cast<size_t>(row) * resolution_ + col) * channels_;
    }

    std::span<float> plane_values(int plane) { return planes_[plane]; }
    std::span<const float> plane_values(int plane) const { return planes_[plane]; }

    // Min/max over every stored value; handy for Lipschitz-style bounds.
    std::pair<float, float> value_range() const;

  private:
    int channels_ = 0;
    int resolution_ = 0;
    std::vector<float> planes_[3];
};

/// Align-corners mapping from a world coordinate in [-0.5, 0.5] to a
/// continuous texel coordinate in [0, R-1]. Texel centers land exactly on
/// integers.
inline float world_to_texel(float c, int resolution) {
    return (c + 0.5f) * static_cast<float>(resolution - 1);
}
inline float texel_to_world(float u, int resolution) {
    return u / static_cast<float>(resolution - 1) - 0.5f;
}

/// Projects x onto the three planes, bilinearly interpolates each, and
/// writes the mean of the three per-channel features into `out` (length C).
/// Projections outside the plane clamp to the border texel.
void sample_triplane(const Triplane& tp, const vec3f& x, std::span<float> out);
std::vector<float> sample_triplane(const Triplane& tp, const vec3f& x);

/// Deterministic smooth random field (sum of seeded sinusoids), values in
/// [-1, 1]. The same seed reproduces the same planes bit for bit.
Triplane procedural_triplane(uint64_t seed, int channels, int resolution);

// Binary triplane container, magic "TRPL". Header: magic, u32 version,
// u32 channels, u32 resolution; payload 3*C*R*R little-endian f32, planes
// xy,xz,yz, each channel-planar row-major.
void write_triplane(const Triplane& tp, const std::filesystem::path& path);
Triplane read_triplane(const std::filesystem::path& path);

}  // namespace trifuse
