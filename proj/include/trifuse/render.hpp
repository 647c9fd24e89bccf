// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

#include "trifuse/camera.hpp"
#include "trifuse/field.hpp"
#include "trifuse/image.hpp"

namespace trifuse {

// Optional deformation applied to every quadrature sample position before the
// field is evaluated. Must be thread-safe.
using point_warp = std::function<vec3d(const vec3d&)>;

struct RenderConfig {
    int width = 128;
    int height = 128;
    int samples_per_ray = 64;
    double t_near = 0.1;
    double t_far = 2.6;
    vec3f background = {1, 1, 1};
    point_warp warp;          // empty = no warp
    bool jitter = false;      // stratified jitter instead of deterministic midpoints
    uint64_t jitter_seed = 0;
    int threads = 1;
};

// Throws a parameter error unless width/height >= 1, samples_per_ray >= 2,
// t_near < t_far, and threads >= 1.
void validate_render_config(const RenderConfig& cfg);

// Output rasters. `feature` always has 32 channels; its first 3 channels equal
// `rgb` exactly (background composites into those), channels the field does
// not produce stay zero. `depth` is the transmittance-weighted expected
// termination distance; `alpha` is total opacity in [0,1].
struct RenderedImage {
    ImageF rgb;      // 3 x H x W
    ImageF feature;  // 32 x H x W
    ImageF depth;    // 1 x H x W
    ImageF alpha;    // 1 x H x W
};

inline constexpr int kFeatureImageChannels = 32;

// Ray-marched volume render: samples_per_ray midpoint samples on
// [t_near, t_far], opacity alpha_i = 1 - exp(-sigma_i * delta_i), colors
// composited front to back, remaining transmittance filled with the
// background color. Deterministic and bit-identical across thread counts.
// Non-finite field output raises a numerical error naming the pixel.
RenderedImage render(const Field& field, const Camera& cam, const RenderConfig& cfg);

// Depth channel of render() with pixels of alpha < 0.5 marked invalid (NaN).
ImageF render_depth(const Field& field, const Camera& cam, const RenderConfig& cfg);

// Depth validity and the file encoding of invalid pixels (NaN <-> -1.0).
bool depth_valid(float d);
ImageF encode_depth(const ImageF& depth);  //  NaN -> -1.0 for storage
ImageF decode_depth(const ImageF& depth);  // negatives -> NaN after loading

}  // namespace trifuse
