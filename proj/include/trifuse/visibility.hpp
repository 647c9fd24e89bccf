// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "trifuse/camera.hpp"
#include "trifuse/render.hpp"
#include "trifuse/triplane.hpp"

namespace trifuse {

// Three single-channel square rasters sharing the triplane plane-axis
// convention. Visibility rasters hold strictly binary values; occlusion masks
// hold values in [0,1].
struct MaskTriplane {
    int resolution = 0;
    std::array<std::vector<float>, 3> planes;  // row-major R x R each

    MaskTriplane() = default;
    explicit MaskTriplane(int res, float fill = 0);

    float& at(plane_id p, int v, int u) { return planes[p][size_t(v) * resolution + u]; }
    float at(plane_id p, int v, int u) const { return planes[p][size_t(v) * resolution + u]; }
};

using VisibilityTriplane = MaskTriplane;
using OcclusionMask = MaskTriplane;

// Back-projects every valid depth pixel along its camera ray into a world
// point. `depth` must be a 1-channel raster from render_depth (NaN or
// negative marks invalid pixels).
std::vector<vec3d> depth_to_points(const ImageF& depth, const Camera& cam);

// Splats points orthographically onto the three planes with nearest-texel
// rounding under the align-corners mapping, then applies a binary dilation of
// the given radius (0 disables it). Out-of-range points clamp to the border.
VisibilityTriplane rasterize_visibility(std::span<const vec3d> points, int resolution,
                                        int dilation_radius = 1);

// render_depth -> depth_to_points -> rasterize_visibility in one call.
VisibilityTriplane visibility_for(const Field& field, const Camera& cam, int resolution,
                                  const RenderConfig& cfg, int dilation_radius = 1);

// Per texel clamp(frontal - input, 0, 1): regions seen by the frontal view
// but hidden from the input view.
OcclusionMask occlusion_mask(const VisibilityTriplane& frontal,
                             const VisibilityTriplane& input);

// Bilinear resample to a new resolution (align-corners grid).
MaskTriplane resample_mask(const MaskTriplane& mask, int resolution);

// Stored as a 3 x R x R "IMGF" raster, plane order xy, xz, yz.
void write_mask_triplane(const MaskTriplane& mask, const std::filesystem::path& path);
MaskTriplane read_mask_triplane(const std::filesystem::path& path);

}  // namespace trifuse
