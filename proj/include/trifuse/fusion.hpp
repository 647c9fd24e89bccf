// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "trifuse/triplane.hpp"
#include "trifuse/visibility.hpp"

namespace trifuse {

// Per-plane 2D displacement field in texel units: channel 0 = du, channel 1 =
// dv, each plane stored channel-major (ch * R + v) * R + u. A zero field is
// the identity warp.
struct FlowField {
    int resolution = 0;
    std::array<std::vector<float>, 3> planes;  // 2 x R x R each

    FlowField() = default;
    explicit FlowField(int res);

    float& at(plane_id p, int ch, int v, int u) {
        return planes[p][(size_t(ch) * resolution + v) * resolution + u];
    }
    float at(plane_id p, int ch, int v, int u) const {
        return planes[p][(size_t(ch) * resolution + v) * resolution + u];
    }
};

// Smooth seeded displacement field (sums of sinusoids), |values| <= magnitude.
FlowField procedural_flow(uint64_t seed, int resolution, float magnitude);

// Binary format: magic "FLOW", u32 version (1), u32 R, then 3 planes x 2
// channels x R x R little-endian floats.
void write_flow(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flow(const std::filesystem::path& path);

// Backward (gather) warp, each plane independently: output texel (u,v) reads
// the input plane bilinearly at (u,v) + flow(u,v), clamping to the border.
Triplane warp_triplane(const Triplane& tp, const FlowField& flow);

// Deterministic visibility-weighted blend. Per plane and texel, with
// w = box_blur(vis_undist, smooth_radius):
//   fused = w * undist + (1 - w) * (vis_prior * prior + (1 - vis_prior) * undist)
// so fully visible input texels keep the undistorted value and occluded ones
// fall back to the prior where the prior saw them. Visibility rasters are
// bilinearly resampled to the triplane resolution when they differ.
Triplane fuse_triplanes(const Triplane& undist, const Triplane& prior,
                        const VisibilityTriplane& vis_undist,
                        const VisibilityTriplane& vis_prior, int smooth_radius = 0);

// Box blur with a (2r+1)^2 window, truncated and renormalized at borders.
MaskTriplane box_blur_mask(const MaskTriplane& mask, int radius);

// Mean absolute difference over all 3 * C * R^2 values.
double loss_undist(const Triplane& undist, const Triplane& gt);

// Sum of the mean absolute differences of the two visibility pairs.
double loss_vis(const VisibilityTriplane& raw, const VisibilityTriplane& raw_gt,
                const VisibilityTriplane& prior, const VisibilityTriplane& prior_gt);

// Mean of |fused - gt| * (1 + vis_gt + occ_mask); the single-channel masks
// broadcast across the feature channels and are resampled to the triplane
// resolution when they differ.
double loss_fusion(const Triplane& fused, const Triplane& gt,
                   const VisibilityTriplane& vis_gt, const OcclusionMask& occ_mask);

struct LossWeights {
    double undist = 1;
    double vis = 1;
    double fusion = 1;
    double render = 1;
};

// Weighted sum of the four components. Negative weights raise a parameter
// error; the render component is supplied by a pluggable image metric.
double loss_total(double undist, double vis, double fusion, double render,
                  const LossWeights& w);

}  // namespace trifuse
