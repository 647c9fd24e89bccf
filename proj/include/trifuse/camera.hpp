// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "trifuse/math.hpp"

namespace trifuse {

// Pinhole camera described by 25 reals: a flattened 4x4 rigid camera-to-world
// extrinsic (row-major) followed by a flattened 3x3 normalized intrinsic
// (row-major, focal lengths and principal point in units of image width).
// Camera axes follow the x-right, y-down, z-forward convention.
struct Camera {
    mat4d extrinsic;  // defaults to identity
    mat3d intrinsic = {3.12, 0, 0.5, 0, 3.12, 0.5, 0, 0, 1};
};

inline constexpr double kDefaultFocal = 3.12;

// Normalized intrinsic with the principal point at the image center.
mat3d default_intrinsic(double focal = kDefaultFocal);

// Throws a parameter error if the rotation block is not orthonormal within
// 1e-5, the bottom extrinsic row is not (0,0,0,1), a focal length is <= 0, or
// the intrinsic is singular.
void validate_camera(const Camera& cam);

// Camera placed at `eye` with its optical axis through `target`. `up` picks
// the horizon; the stored y axis points down per the camera convention.
Camera look_at_camera(const vec3d& eye, const vec3d& target,
                      const vec3d& up = {0, 1, 0}, double focal = kDefaultFocal);

// Flattened 25-parameter form and back.
std::array<double, 25> camera_params(const Camera& cam);
Camera camera_from_params(std::span<const double, 25> params);

struct ray {
    vec3d origin;
    vec3d direction;  // unit length
};

// Ray through the center of pixel (u, v): normalized image coordinates are
// (u + 0.5, v + 0.5) / width, pushed through the inverse intrinsic and the
// extrinsic rotation.
ray pixel_ray(const Camera& cam, int width, int height, int u, int v);

// All width*height rays in row-major pixel order. Validates the camera.
std::vector<ray> generate_rays(const Camera& cam, int width, int height);

// JSON file {"extrinsic": [16 numbers], "intrinsic": [9 numbers]}.
void write_camera(const Camera& cam, const std::filesystem::path& path);
Camera read_camera(const std::filesystem::path& path);

}  // namespace trifuse
