// SPDX-License-Identifier: Apache-2.0

#include "trifuse/visibility.hpp"

#include <cmath>
#include <string>

#include "trifuse/error.hpp"
#include "trifuse/image.hpp"

namespace trifuse {

MaskTriplane::MaskTriplane(int res, float fill) : resolution(res) {
    if (res < 1) throw parameter_error("mask resolution must be >= 1");
    for (auto& plane : planes) plane.assign(size_t(res) * res, fill);
}

std::vector<vec3d> depth_to_points(const ImageF& depth, const Camera& cam) {
    if (depth.channels() != 1)
        throw structural_error("depth_to_points: expected a 1-channel raster, got " +
                               std::to_string(depth.channels()));
    std::vector<ray> rays = generate_rays(cam, depth.width(), depth.height());
    std::vector<vec3d> points;
    for (int y = 0; y < depth.height(); y++)
        for (int x = 0; x < depth.width(); x++) {
            float d = depth.at(0, y, x);
            if (!depth_valid(d)) continue;
            const ray& r = rays[size_t(y) * depth.width() + x];
            points.push_back(r.origin + double(d) * r.direction);
        }
    return points;
}

namespace {

// Nearest texel under the align-corners mapping, clamped into the raster.
inline int nearest_texel(float world, int resolution) {
    long t = std::lround(world_to_texel(world, resolution));
    return int(clamp(t, 0l, long(resolution - 1)));
}

void dilate_plane(std::vector<float>& plane, int resolution, int radius) {
    // Binary Chebyshev dilation, separable: rows first, then columns.
    std::vector<float> tmp(plane.size(), 0.0f);
    for (int v = 0; v < resolution; v++)
        for (int u = 0; u < resolution; u++) {
            float m = 0;
            for (int k = std::max(0, u - radius); k <= std::min(resolution - 1, u + radius); k++)
                m = std::max(m, plane[size_t(v) * resolution + k]);
            tmp[size_t(v) * resolution + u] = m;
        }
    for (int v = 0; v < resolution; v++)
        for (int u = 0; u < resolution; u++) {
            float m = 0;
            for (int k = std::max(0, v - radius); k <= std::min(resolution - 1, v + radius); k++)
                m = std::max(m, tmp[size_t(k) * resolution + u]);
            plane[size_t(v) * resolution + u] = m;
        }
}

}  // namespace

VisibilityTriplane rasterize_visibility(std::span<const vec3d> points, int resolution,
                                        int dilation_radius) {
    if (resolution < 1) throw parameter_error("rasterize_visibility: resolution must be >= 1");
    if (dilation_radius < 0) throw parameter_error("rasterize_visibility: negative dilation");
    VisibilityTriplane vis(resolution);
    for (const vec3d& pd : points) {
        vec3f p = to_float(pd);
        for (int plane = 0; plane < 3; plane++) {
            float a, b;
            plane_coords(plane_id(plane), p.x, p.y, p.z, a, b);
            vis.at(plane_id(plane), nearest_texel(b, resolution), nearest_texel(a, resolution)) =
                1.0f;
        }
    }
    if (dilation_radius > 0)
        for (auto& plane : vis.planes) dilate_plane(plane, resolution, dilation_radius);
    return vis;
}

VisibilityTriplane visibility_for(const Field& field, const Camera& cam, int resolution,
                                  const RenderConfig& cfg, int dilation_radius) {
    ImageF depth = render_depth(field, cam, cfg);
    std::vector<vec3d> points = depth_to_points(depth, cam);
    return rasterize_visibility(points, resolution, dilation_radius);
}

OcclusionMask occlusion_mask(const VisibilityTriplane& frontal,
                             const VisibilityTriplane& input) {
    if (frontal.resolution != input.resolution)
        throw structural_error("occlusion_mask: resolution mismatch " +
                               std::to_string(frontal.resolution) + " vs " +
                               std::to_string(input.resolution));
    OcclusionMask mask(frontal.resolution);
    for (int p = 0; p < 3; p++)
        for (size_t k = 0; k < mask.planes[p].size(); k++)
            mask.planes[p][k] = clamp(frontal.planes[p][k] - input.planes[p][k], 0.0f, 1.0f);
    return mask;
}

MaskTriplane resample_mask(const MaskTriplane& mask, int resolution) {
    if (resolution < 1) throw parameter_error("resample_mask: resolution must be >= 1");
    if (resolution == mask.resolution) return mask;
    MaskTriplane out(resolution);
    const int rin = mask.resolution;
    // Align-corners grid mapping between the two resolutions.
    double step = resolution > 1 ? double(rin - 1) / double(resolution - 1) : 0.0;
    for (int p = 0; p < 3; p++)
        for (int v = 0; v < resolution; v++)
            for (int u = 0; u < resolution; u++) {
                double su = resolution > 1 ? u * step : (rin - 1) * 0.5;
                double sv = resolution > 1 ? v * step : (rin - 1) * 0.5;
                int u0 = std::min(int(su), rin - 1), v0 = std::min(int(sv), rin - 1);
                int u1 = std::min(u0 + 1, rin - 1), v1 = std::min(v0 + 1, rin - 1);
                double fu = su - u0, fv = sv - v0;
                const auto& src = mask.planes[p];
                double val = (1 - fu) * (1 - fv) * src[size_t(v0) * rin + u0] +
                             fu * (1 - fv) * src[size_t(v0) * rin + u1] +
                             (1 - fu) * fv * src[size_t(v1) * rin + u0] +
                             fu * fv * src[size_t(v1) * rin + u1];
                out.at(plane_id(p), v, u) = float(val);
            }
    return out;
}

void write_mask_triplane(const MaskTriplane& mask, const std::filesystem::path& path) {
    if (mask.resolution < 1) throw structural_error("write_mask_triplane: empty mask");
    ImageF img(3, mask.resolution, mask.resolution);
    for (int p = 0; p < 3; p++) {
        auto dst = img.channel(p);
        std::copy(mask.planes[p].begin(), mask.planes[p].end(), dst.begin());
    }
    write_imagef(img, path);
}

MaskTriplane read_mask_triplane(const std::filesystem::path& path) {
    ImageF img = read_imagef(path);
    if (img.channels() != 3 || img.height() != img.width())
        throw format_error(path.string() + ": expected a square 3-channel raster");
    MaskTriplane mask(img.height());
    for (int p = 0; p < 3; p++) {
        auto src = img.channel(p);
        std::copy(src.begin(), src.end(), mask.planes[p].begin());
    }
    return mask;
}

}  // namespace trifuse
