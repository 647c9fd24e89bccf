// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "trifuse/augment.hpp"
#include "trifuse/camera.hpp"
#include "trifuse/error.hpp"
#include "trifuse/field.hpp"
#include "trifuse/render.hpp"
#include "trifuse/rng.hpp"

using namespace trifuse;

namespace {

vec3d random_point(rng64& rng) {
    return {rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)};
}

// Evaluates the base field at the independently-computed warped position, so
// warped renders can be checked against pure oracle math.
struct OracleWarpedField final : Field {
    const Field* base;
    double theta, phi;
    bool orthonormal;

    OracleWarpedField(const Field* base_, double theta_, double phi_, bool orthonormal_)
        : base(base_), theta(theta_), phi(phi_), orthonormal(orthonormal_) {}

    float evaluate(const vec3f& p, std::span<float> out) const override {
        auto q = oracle::shoulder_point(p.x, p.y, p.z, theta, phi, orthonormal);
        return base->evaluate({float(q[0]), float(q[1]), float(q[2])}, out);
    }
};

// World point -> continuous pixel coordinate, inverting the ray convention
// (pixel centers at (u+0.5)/width with both axes normalized by width).
std::array<double, 2> project(const Camera& cam, const vec3d& p, int width) {
    vec3d rel = {p.x - cam.extrinsic(0, 3), p.y - cam.extrinsic(1, 3),
                 p.z - cam.extrinsic(2, 3)};
    vec3d d;  // camera-space direction: transpose(R) * rel
    d.x = cam.extrinsic(0, 0) * rel.x + cam.extrinsic(1, 0) * rel.y +
          cam.extrinsic(2, 0) * rel.z;
    d.y = cam.extrinsic(0, 1) * rel.x + cam.extrinsic(1, 1) * rel.y +
          cam.extrinsic(2, 1) * rel.z;
    d.z = cam.extrinsic(0, 2) * rel.x + cam.extrinsic(1, 2) * rel.y +
          cam.extrinsic(2, 2) * rel.z;
    double xn = cam.intrinsic(0, 0) * (d.x / d.z) + cam.intrinsic(0, 2);
    double yn = cam.intrinsic(1, 1) * (d.y / d.z) + cam.intrinsic(1, 2);
    return {xn * width - 0.5, yn * width - 0.5};
}

double alpha_centroid_u(const RenderedImage& img) {
    double num = 0, den = 0;
    for (int v = 0; v < img.alpha.height(); v++)
        for (int u = 0; u < img.alpha.width(); u++) {
            num += img.alpha.at(0, v, u) * u;
            den += img.alpha.at(0, v, u);
        }
    return num / den;
}

}  // namespace

TEST_CASE("zero angles leave every point untouched") {
    ShoulderWarp w;
    rng64 rng(11);
    for (int i = 0; i < 50; i++) {
        vec3d p = random_point(rng);
        vec3d q = w.warp(p);
        CHECK(q.x == p.x);
        CHECK(q.y == p.y);
        CHECK(q.z == p.z);
    }
}

TEST_CASE("points at or above the chin line never move") {
    ShoulderWarp w;
    w.theta_base = 0.3;
    w.phi_base = 0.25;
    rng64 rng(12);
    for (int i = 0; i < 50; i++) {
        vec3d p = random_point(rng);
        p.y = rng.uniform(0.2, 0.8);  // at or above y_chin = 0.2
        vec3d q = w.warp(p);
        CHECK(q.x == p.x);
        CHECK(q.y == p.y);
        CHECK(q.z == p.z);
    }
    vec3d chin = w.warp({0.0, 0.2, 0.0});
    CHECK(chin.x == 0.0);
    CHECK(chin.y == 0.2);
    CHECK(chin.z == 0.0);
}

TEST_CASE("full roll applies at the shoulder base") {
    ShoulderWarp w;
    w.theta_base = 0.3;
    vec3d p = {0.1, -0.5, 0.0};
    vec3d q = w.warp(p);
    double c = std::cos(0.3), s = std::sin(0.3);
    CHECK(std::abs(q.x - (c * 0.1 - s * -0.5)) <= 1e-9);
    CHECK(std::abs(q.y - (s * 0.1 + c * -0.5)) <= 1e-9);
    CHECK(std::abs(q.z) <= 1e-9);

    // At y_base the per-point angle equals theta_base with no scaling error:
    // the warp must agree bit-for-bit with the full-angle matrix product.
    w.phi_base = 0.2;
    vec3d full = shoulder_yaw_matrix(0.2, false) * (shoulder_roll_matrix(0.3) * p);
    vec3d r = w.warp(p);
    CHECK(r.x == full.x);
    CHECK(r.y == full.y);
    CHECK(r.z == full.z);
}

TEST_CASE("per-point angle is affine in y below the chin") {
    ShoulderWarp w;
    w.theta_base = 0.2;
    // Recover the roll angle from the xy-plane rotation of a probe point.
    auto measured = [&](double y) {
        vec3d p = {0.3, y, 0.0};
        vec3d q = w.warp(p);
        return std::atan2(q.y, q.x) - std::atan2(p.y, p.x);
    };
    double ys[3] = {-0.5, -0.33, -0.08};
    double angles[3];
    for (int i = 0; i < 3; i++) {
        angles[i] = measured(ys[i]);
        double expect = (0.2 - ys[i]) / 0.7 * 0.2;
        CHECK(angles[i] == doctest::Approx(expect).epsilon(1e-9));
    }
    double slope01 = (angles[1] - angles[0]) / (ys[1] - ys[0]);
    double slope12 = (angles[2] - angles[1]) / (ys[2] - ys[1]);
    CHECK(slope01 == doctest::Approx(slope12).epsilon(1e-9));
}

TEST_CASE("warp is continuous across the chin line") {
    ShoulderWarp w;
    w.theta_base = 0.3;
    w.phi_base = 0.25;
    double prev = 1e9;
    for (double eps : {1e-3, 1e-6, 1e-9}) {
        vec3d p = {0.4, 0.2 - eps, -0.3};
        vec3d q = w.warp(p);
        double norm = std::sqrt((q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y) +
                                (q.z - p.z) * (q.z - p.z));
        CHECK(norm < prev);
        if (eps <= 1e-6) CHECK(norm <= 1e-6);
        prev = norm;
    }
}

TEST_CASE("pure roll preserves distance from the z-axis, pure yaw from the y-axis") {
    rng64 rng(13);
    ShoulderWarp roll;
    roll.theta_base = 0.4;
    for (int i = 0; i < 30; i++) {
        vec3d p = random_point(rng);
        p.y = rng.uniform(-0.6, 0.19);
        vec3d q = roll.warp(p);
        CHECK(std::hypot(q.x, q.y) == doctest::Approx(std::hypot(p.x, p.y)).epsilon(1e-12));
        CHECK(q.z == p.z);
    }
    ShoulderWarp yaw;
    yaw.phi_base = 0.4;
    yaw.orthonormal_yaw = true;
    for (int i = 0; i < 30; i++) {
        vec3d p = random_point(rng);
        p.y = rng.uniform(-0.6, 0.19);
        vec3d q = yaw.warp(p);
        CHECK(std::hypot(q.x, q.z) == doctest::Approx(std::hypot(p.x, p.z)).epsilon(1e-12));
        CHECK(q.y == p.y);
    }
}

TEST_CASE("default yaw matrix reproduces the distinctive sign pattern") {
    double a = 0.25;
    double c = std::cos(a), s = std::sin(a);
    mat3d printed = shoulder_yaw_matrix(a, false);
    CHECK(printed(0, 0) == c);
    CHECK(printed(0, 2) == -s);
    CHECK(printed(2, 0) == -s);
    CHECK(printed(2, 2) == c);
    CHECK(printed(1, 1) == 1.0);
    // Both off-diagonals negative: determinant c^2 - s^2 < 1, not an isometry.
    double det = printed(0, 0) * printed(2, 2) - printed(0, 2) * printed(2, 0);
    CHECK(det == doctest::Approx(c * c - s * s).epsilon(1e-12));
    vec3d p = {1.0, 0.0, -1.0};
    vec3d q = printed * p;
    CHECK(std::abs(length(q) - length(p)) > 0.1);

    mat3d ortho = shoulder_yaw_matrix(a, true);
    CHECK(ortho(0, 2) == s);
    CHECK(ortho(2, 0) == -s);
    double det2 = ortho(0, 0) * ortho(2, 2) - ortho(0, 2) * ortho(2, 0);
    CHECK(det2 == doctest::Approx(1.0).epsilon(1e-12));
    rng64 rng(14);
    for (int i = 0; i < 20; i++) {
        vec3d v = random_point(rng);
        CHECK(length(ortho * v) == doctest::Approx(length(v)).epsilon(1e-12));
    }
}

TEST_CASE("zero-angle shoulder render is bit-identical to a plain render") {
    AnalyticBlobField field({{{0.0f, -0.3f, 0.0f}, {0.15f, 0.2f, 0.15f}, 8.0f,
                             {0.8f, 0.5f, 0.3f}}});
    Camera cam = look_at_camera({0, 0, 2.7}, {0, -0.2, 0});
    RenderConfig cfg;
    cfg.width = cfg.height = 16;
    cfg.samples_per_ray = 32;
    cfg.t_near = 1.8;
    cfg.t_far = 3.6;
    RenderedImage plain = render(field, cam, cfg);
    RenderedImage warped = render_with_shoulder(field, cam, cfg, ShoulderWarp{});
    for (size_t k = 0; k < plain.rgb.size(); k++)
        CHECK(plain.rgb.values()[k] == warped.rgb.values()[k]);
    for (size_t k = 0; k < plain.alpha.size(); k++)
        CHECK(plain.alpha.values()[k] == warped.alpha.values()[k]);
}

TEST_CASE("a head-region blob is untouched by the shoulder warp") {
    // Blob six standard deviations above the chin line: warped samples can
    // never climb past the chin, so the images must agree to float noise.
    AnalyticBlobField field({{{0.0f, 0.35f, 0.0f}, {0.025f, 0.025f, 0.025f}, 8.0f,
                             {0.9f, 0.4f, 0.2f}}});
    Camera cam = look_at_camera({0, 0.35, 2.7}, {0, 0.35, 0});
    RenderConfig cfg;
    cfg.width = cfg.height = 24;
    cfg.samples_per_ray = 32;
    cfg.t_near = 1.8;
    cfg.t_far = 3.6;
    ShoulderWarp w;
    w.theta_base = 0.3;
    w.phi_base = 0.25;
    RenderedImage plain = render(field, cam, cfg);
    RenderedImage warped = render_with_shoulder(field, cam, cfg, w);
    for (size_t k = 0; k < plain.rgb.size(); k++)
        CHECK(std::abs(plain.rgb.values()[k] - warped.rgb.values()[k]) <= 1e-6);
}

TEST_CASE("a shoulder blob displaces against the sample rotation") {
    AnalyticBlobField field({{{0.1f, -0.4f, 0.0f}, {0.05f, 0.02f, 0.05f}, 12.0f,
                             {0.9f, 0.2f, 0.1f}}});
    Camera cam = look_at_camera({0, -0.1, 2.7}, {0.05, -0.4, 0});
    RenderConfig cfg;
    cfg.width = cfg.height = 48;
    cfg.samples_per_ray = 48;
    cfg.t_near = 1.8;
    cfg.t_far = 3.6;
    ShoulderWarp w;
    w.theta_base = 0.3;
    RenderedImage plain = render(field, cam, cfg);
    RenderedImage warped = render_with_shoulder(field, cam, cfg, w);

    // Sampling the field at rotated points shows the blob rotated the other
    // way: its apparent center is Rz(-theta_c) * center.
    double theta_c = (0.2 - (-0.4)) / 0.7 * 0.3;
    double c = std::cos(theta_c), s = std::sin(theta_c);
    vec3d center = {0.1, -0.4, 0.0};
    vec3d apparent = {c * center.x + s * center.y, -s * center.x + c * center.y, 0.0};
    double u_plain = alpha_centroid_u(plain);
    double u_warped = alpha_centroid_u(warped);
    CHECK(u_plain == doctest::Approx(project(cam, center, 48)[0]).epsilon(0.05));
    CHECK(u_warped == doctest::Approx(project(cam, apparent, 48)[0]).epsilon(0.05));
    CHECK(u_warped < u_plain - 2.0);  // clearly displaced, not noise

    // Per-pixel agreement with an oracle that bakes the independently
    // implemented warp into the field itself.
    OracleWarpedField oracle_field(&field, 0.3, 0.0, false);
    RenderedImage expect = render(oracle_field, cam, cfg);
    double worst = 0;
    for (size_t k = 0; k < plain.rgb.size(); k++)
        worst = std::max(worst,
                         double(std::abs(expect.rgb.values()[k] - warped.rgb.values()[k])));
    CHECK(worst <= 2e-3);
    CHECK(worst <= 1e-4);  // same quadrature: only float noise remains
}

TEST_CASE("warped renders match the oracle under combined roll and yaw") {
    AnalyticBlobField field({{{0.05f, -0.35f, 0.1f}, {0.08f, 0.06f, 0.08f}, 9.0f,
                             {0.2f, 0.6f, 0.9f}},
                            {{-0.1f, -0.1f, -0.05f}, {0.1f, 0.12f, 0.1f}, 5.0f,
                             {0.9f, 0.8f, 0.1f}}});
    Camera cam = look_at_camera({0.2, 0, 2.6}, {0, -0.2, 0});
    RenderConfig cfg;
    cfg.width = cfg.height = 24;
    cfg.samples_per_ray = 32;
    cfg.t_near = 1.8;
    cfg.t_far = 3.6;
    for (bool ortho : {false, true}) {
        ShoulderWarp w;
        w.theta_base = 0.3;
        w.phi_base = 0.25;
        w.orthonormal_yaw = ortho;
        RenderedImage got = render_with_shoulder(field, cam, cfg, w);
        OracleWarpedField oracle_field(&field, 0.3, 0.25, ortho);
        RenderedImage expect = render(oracle_field, cam, cfg);
        for (size_t k = 0; k < got.rgb.size(); k++)
            CHECK(std::abs(got.rgb.values()[k] - expect.rgb.values()[k]) <= 1e-4);
    }
}

TEST_CASE("identity color parameters reproduce the image bit-exactly") {
    rng64 rng(21);
    ImageF img(3, 5, 7);
    for (float& v : img.values()) v = float(rng.uniform());
    ImageF out = color_augment(img, ColorAugment{});
    for (size_t k = 0; k < img.size(); k++) CHECK(out.values()[k] == img.values()[k]);
}

TEST_CASE("brightness adds before anything else") {
    ImageF gray(3, 2, 2, 0.5f);
    ColorAugment a;
    a.brightness = 0.1f;
    ImageF out = color_augment(gray, a);
    for (float v : out.values()) CHECK(v == doctest::Approx(0.6).epsilon(1e-7));

    // Saturated values clamp.
    ImageF bright(3, 1, 1, 0.95f);
    out = color_augment(bright, a);
    for (float v : out.values()) CHECK(v == 1.0f);
}

TEST_CASE("color augmentation matches the per-pixel HSV oracle") {
    rng64 rng(22);
    for (uint64_t seed = 0; seed < 20; seed++) {
        ColorAugment a = random_color_augment(seed);
        ImageF img(3, 4, 4);
        for (float& v : img.values()) v = float(rng.uniform());
        ImageF out = color_augment(img, a);
        for (int y = 0; y < 4; y++)
            for (int x = 0; x < 4; x++) {
                auto want = oracle::color_augment_pixel(
                    img.at(0, y, x), img.at(1, y, x), img.at(2, y, x), a.brightness,
                    a.contrast, a.saturation, a.hue_degrees);
                CHECK(std::abs(out.at(0, y, x) - want[0]) <= 1e-5);
                CHECK(std::abs(out.at(1, y, x) - want[1]) <= 1e-5);
                CHECK(std::abs(out.at(2, y, x) - want[2]) <= 1e-5);
            }
    }
}

TEST_CASE("hue rotation is periodic and zero saturation makes gray") {
    rng64 rng(23);
    ImageF img(3, 4, 4);
    for (float& v : img.values()) v = float(rng.uniform());

    ColorAugment full_turn;
    full_turn.hue_degrees = 360.0f;
    ImageF out = color_augment(img, full_turn);
    for (size_t k = 0; k < img.size(); k++)
        CHECK(std::abs(out.values()[k] - img.values()[k]) <= 1e-5);

    ColorAugment drain;
    drain.saturation = 0.0f;
    out = color_augment(img, drain);
    for (int y = 0; y < 4; y++)
        for (int x = 0; x < 4; x++) {
            CHECK(out.at(0, y, x) == doctest::Approx(out.at(1, y, x)).epsilon(1e-6));
            CHECK(out.at(1, y, x) == doctest::Approx(out.at(2, y, x)).epsilon(1e-6));
            float maxc = std::max({img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)});
            CHECK(out.at(0, y, x) == doctest::Approx(maxc).epsilon(1e-6));
        }
}

TEST_CASE("seeded augment parameters are deterministic and in range") {
    for (uint64_t seed : {0ull, 1ull, 99ull}) {
        ColorAugment a = random_color_augment(seed);
        ColorAugment b = random_color_augment(seed);
        CHECK(a.brightness == b.brightness);
        CHECK(a.contrast == b.contrast);
        CHECK(a.saturation == b.saturation);
        CHECK(a.hue_degrees == b.hue_degrees);
        CHECK(a.brightness >= -0.2f);
        CHECK(a.brightness <= 0.2f);
        CHECK(a.contrast >= 0.8f);
        CHECK(a.contrast <= 1.25f);
        CHECK(a.saturation >= 0.7f);
        CHECK(a.saturation <= 1.3f);
        CHECK(a.hue_degrees >= -18.0f);
        CHECK(a.hue_degrees <= 18.0f);
    }
    ColorAugment a = random_color_augment(5);
    ColorAugment b = random_color_augment(6);
    CHECK(a.brightness != b.brightness);
}
