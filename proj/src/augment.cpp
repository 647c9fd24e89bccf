// SPDX-License-Identifier: Apache-2.0

#include "trifuse/augment.hpp"

#include <cmath>

#include "trifuse/error.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

mat3d shoulder_roll_matrix(double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    mat3d m;
    m(0, 0) = c;
    m(0, 1) = -s;
    m(1, 0) = s;
    m(1, 1) = c;
    return m;
}

mat3d shoulder_yaw_matrix(double angle, bool orthonormal) {
    double c = std::cos(angle), s = std::sin(angle);
    mat3d m;
    m(0, 0) = c;
    m(0, 2) = orthonormal ? s : -s;
    m(2, 0) = -s;
    m(2, 2) = c;
    return m;
}

vec3d ShoulderWarp::warp(const vec3d& p) const {
    if (p.y >= y_chin) return p;
    double d_chin = std::abs(p.y - y_chin);
    double span = std::abs(y_base - y_chin);
    double scale = d_chin / span;
    mat3d rotation = shoulder_yaw_matrix(scale * phi_base, orthonormal_yaw) *
                     shoulder_roll_matrix(scale * theta_base);
    return rotation * p;
}

RenderedImage render_with_shoulder(const Field& field, const Camera& cam,
                                   const RenderConfig& cfg, const ShoulderWarp& warp) {
    RenderConfig warped = cfg;
    warped.warp = [warp](const vec3d& p) { return warp.warp(p); };
    return render(field, cam, warped);
}

ColorAugment random_color_augment(uint64_t seed) {
    rng64 rng(seed);
    ColorAugment a;
    a.brightness = float(rng.uniform(-0.2, 0.2));
    a.contrast = float(rng.uniform(0.8, 1.25));
    a.saturation = float(rng.uniform(0.7, 1.3));
    a.hue_degrees = float(rng.uniform(-18.0, 18.0));
    return a;
}

namespace {

struct hsv {
    double h, s, v;  // h in [0, 360)
};

hsv rgb_to_hsv(double r, double g, double b) {
    double maxc = std::max(r, std::max(g, b));
    double minc = std::min(r, std::min(g, b));
    double delta = maxc - minc;
    double h = 0;
    if (delta > 0) {
        if (maxc == r)
            h = 60.0 * std::fmod((g - b) / delta, 6.0);
        else if (maxc == g)
            h = 60.0 * ((b - r) / delta + 2.0);
        else
            h = 60.0 * ((r - g) / delta + 4.0);
        if (h < 0) h += 360.0;
    }
    double s = maxc <= 0 ? 0 : delta / maxc;
    return {h, s, maxc};
}

void hsv_to_rgb(const hsv& in, double& r, double& g, double& b) {
    double c = in.v * in.s;
    double hp = in.h / 60.0;
    double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double m = in.v - c;
    double rr = 0, gg = 0, bb = 0;
    if (hp < 1) { rr = c; gg = x; }
    else if (hp < 2) { rr = x; gg = c; }
    else if (hp < 3) { gg = c; bb = x; }
    else if (hp < 4) { gg = x; bb = c; }
    else if (hp < 5) { rr = x; bb = c; }
    else { rr = c; bb = x; }
    r = rr + m;
    g = gg + m;
    b = bb + m;
}

}  // namespace

ImageF color_augment(const ImageF& rgb, const ColorAugment& a) {
    if (rgb.channels() != 3) throw structural_error("color_augment needs a 3-channel raster");
    ImageF out = rgb;

    bool do_brightness = a.brightness != 0;
    bool do_contrast = a.contrast != 1;
    bool do_hsv = a.hue_degrees != 0 || a.saturation != 1;
    if (!do_brightness && !do_contrast && !do_hsv) return out;

    if (do_brightness)
        for (float& v : out.values()) v += a.brightness;
    if (do_contrast)
        for (float& v : out.values()) v = (v - 0.5f) * a.contrast + 0.5f;
    if (do_hsv) {
        for (int y = 0; y < out.height(); y++)
            for (int x = 0; x < out.width(); x++) {
                double r = clamp01(out.at(0, y, x));
                double g = clamp01(out.at(1, y, x));
                double b = clamp01(out.at(2, y, x));
                hsv c = rgb_to_hsv(r, g, b);
                c.h = std::fmod(c.h + a.hue_degrees, 360.0);
                if (c.h < 0) c.h += 360.0;
                c.s = clamp(c.s * double(a.saturation), 0.0, 1.0);
                hsv_to_rgb(c, r, g, b);
                out.at(0, y, x) = float(r);
                out.at(1, y, x) = float(g);
                out.at(2, y, x) = float(b);
            }
    }
    for (float& v : out.values()) v = clamp01(v);
    return out;
}

}  // namespace trifuse
