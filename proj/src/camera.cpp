// SPDX-License-Identifier: Apache-2.0

#include "trifuse/camera.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "trifuse/error.hpp"

namespace trifuse {

mat3d default_intrinsic(double focal) {
    mat3d k;
    k(0, 0) = focal;
    k(1, 1) = focal;
    k(0, 2) = 0.5;
    k(1, 2) = 0.5;
    return k;
}

void validate_camera(const Camera& cam) {
    for (double v : cam.extrinsic.m)
        if (!std::isfinite(v)) throw parameter_error("camera extrinsic has non-finite entries");
    for (double v : cam.intrinsic.m)
        if (!std::isfinite(v)) throw parameter_error("camera intrinsic has non-finite entries");

    mat3d r = cam.extrinsic.rotation();
    mat3d rtr = transpose(r) * r;
    for (int i = 0; i < 3; i++)
        for (int j = 0; j < 3; j++) {
            double want = i == j ? 1.0 : 0.0;
            if (std::abs(rtr(i, j) - want) > 1e-5)
                throw parameter_error("camera rotation is not orthonormal within 1e-5");
        }
    const double* m = cam.extrinsic.m.data();
    if (std::abs(m[12]) > 1e-9 || std::abs(m[13]) > 1e-9 || std::abs(m[14]) > 1e-9 ||
        std::abs(m[15] - 1.0) > 1e-9)
        throw parameter_error("camera extrinsic bottom row must be (0, 0, 0, 1)");

    if (cam.intrinsic(0, 0) <= 0 || cam.intrinsic(1, 1) <= 0)
        throw parameter_error("camera focal lengths must be > 0");
    if (std::abs(determinant(cam.intrinsic)) < 1e-12)
        throw parameter_error("camera intrinsic is singular");
}

Camera look_at_camera(const vec3d& eye, const vec3d& target, const vec3d& up, double focal) {
    vec3d forward = target - eye;
    if (length(forward) < 1e-12) throw parameter_error("look_at_camera: eye equals target");
    forward = normalize(forward);
    vec3d right = cross(forward, up);
    if (length(right) < 1e-9) right = cross(forward, vec3d{0, 0, 1});
    right = normalize(right);
    vec3d down = cross(forward, right);

    Camera cam;
    // Columns of the rotation are the camera axes (x right, y down, z forward).
    cam.extrinsic(0, 0) = right.x;
    cam.extrinsic(1, 0) = right.y;
    cam.extrinsic(2, 0) = right.z;
    cam.extrinsic(0, 1) = down.x;
    cam.extrinsic(1, 1) = down.y;
    cam.extrinsic(2, 1) = down.z;
    cam.extrinsic(0, 2) = forward.x;
    cam.extrinsic(1, 2) = forward.y;
    cam.extrinsic(2, 2) = forward.z;
    cam.extrinsic(0, 3) = eye.x;
    cam.extrinsic(1, 3) = eye.y;
    cam.extrinsic(2, 3) = eye.z;
    cam.intrinsic = default_intrinsic(focal);
    return cam;
}

std::array<double, 25> camera_params(const Camera& cam) {
    std::array<double, 25> p;
    for (int i = 0; i < 16; i++) p[i] = cam.extrinsic.m[i];
    for (int i = 0; i < 9; i++) p[16 + i] = cam.intrinsic.m[i];
    return p;
}

Camera camera_from_params(std::span<const double, 25> params) {
    Camera cam;
    for (int i = 0; i < 16; i++) cam.extrinsic.m[i] = params[i];
    for (int i = 0; i < 9; i++) cam.intrinsic.m[i] = params[16 + i];
    return cam;
}

ray pixel_ray(const Camera& cam, int width, int height, int u, int v) {
    if (width < 1 || height < 1) throw parameter_error("pixel_ray: empty image");
    mat3d kinv = inverse(cam.intrinsic);
    vec3d pixel{(u + 0.5) / width, (v + 0.5) / width, 1.0};
    vec3d dir_cam = kinv * pixel;
    vec3d dir_world = cam.extrinsic.rotation() * dir_cam;
    return {cam.extrinsic.translation(), normalize(dir_world)};
}

std::vector<ray> generate_rays(const Camera& cam, int width, int height) {
    validate_camera(cam);
    if (width < 1 || height < 1) throw parameter_error("generate_rays: empty image");

    mat3d kinv = inverse(cam.intrinsic);
    mat3d rot = cam.extrinsic.rotation();
    vec3d origin = cam.extrinsic.translation();
    std::vector<ray> rays;
    rays.reserve(size_t(width) * height);
    for (int v = 0; v < height; v++)
        for (int u = 0; u < width; u++) {
            vec3d pixel{(u + 0.5) / width, (v + 0.5) / width, 1.0};
            rays.push_back({origin, normalize(rot * (kinv * pixel))});
        }
    return rays;
}

void write_camera(const Camera& cam, const std::filesystem::path& path) {
    nlohmann::json j;
    j["extrinsic"] = cam.extrinsic.m;
    j["intrinsic"] = cam.intrinsic.m;
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + path.string());
}

Camera read_camera(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw format_error(path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("extrinsic") || !j.contains("intrinsic"))
        throw format_error(path.string() + ": expected keys \"extrinsic\" and \"intrinsic\"");
    const auto& ext = j["extrinsic"];
    const auto& intr = j["intrinsic"];
    if (!ext.is_array() || ext.size() != 16 || !intr.is_array() || intr.size() != 9)
        throw format_error(path.string() + ": extrinsic must have 16 numbers, intrinsic 9");
    Camera cam;
    try {
        for (int i = 0; i < 16; i++) cam.extrinsic.m[i] = ext[i].get<double>();
        for (int i = 0; i < 9; i++) cam.intrinsic.m[i] = intr[i].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw format_error(path.string() + ": " + e.what());
    }
    validate_camera(cam);
    return cam;
}

}  // namespace trifuse
