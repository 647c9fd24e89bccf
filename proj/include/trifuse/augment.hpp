// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "trifuse/image.hpp"
#include "trifuse/math.hpp"
#include "trifuse/render.hpp"

namespace trifuse {

// Shoulder-pose deformation of sample points: points above the chin line are
// untouched; below it, each point is rolled about z and yawed about y by
// angles growing linearly with distance under the chin, reaching theta_base /
// phi_base at the shoulder base. Roll applies first, then yaw.
struct ShoulderWarp {
    double theta_base = 0;  // roll angle at the shoulder base, radians
    double phi_base = 0;    // yaw angle at the shoulder base, radians
    double y_chin = 0.2;
    double y_base = -0.5;
    // The default yaw matrix carries -sin in both off-diagonal entries and is
    // therefore not an isometry; enabling this swaps in the standard y-axis
    // rotation.
    bool orthonormal_yaw = false;

    vec3d warp(const vec3d& p) const;
};

// The two constituent matrices for a given per-point angle.
mat3d shoulder_roll_matrix(double angle);
mat3d shoulder_yaw_matrix(double angle, bool orthonormal);

// render() with every sample position passed through the shoulder warp.
RenderedImage render_with_shoulder(const Field& field, const Camera& cam,
                                   const RenderConfig& cfg, const ShoulderWarp& warp);

// Color-space augmentation. Stages apply in order: brightness (additive),
// contrast (gain about 0.5), then hue/saturation in HSV space; the result is
// clamped to [0,1]. Any stage at its identity value is skipped entirely, so
// all-identity parameters reproduce the input bit-exactly.
struct ColorAugment {
    float brightness = 0;   // offset, identity 0
    float contrast = 1;     // gain, identity 1
    float saturation = 1;   // HSV saturation gain, identity 1
    float hue_degrees = 0;  // hue rotation, identity 0
};

// Seeded parameters drawn from the supported ranges: brightness [-0.2, 0.2],
// contrast [0.8, 1.25], saturation [0.7, 1.3], hue [-18, 18] degrees.
ColorAugment random_color_augment(uint64_t seed);

ImageF color_augment(const ImageF& rgb, const ColorAugment& a);

}  // namespace trifuse
