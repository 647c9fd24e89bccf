// SPDX-License-Identifier: Apache-2.0

#include "trifuse/triplane.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "trifuse/binio.hpp"
#include "trifuse/error.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

Triplane::Triplane(int channels, int resolution)
    : channels_(channels), resolution_(resolution) {
    if (channels < 1) throw parameter_error("triplane channels must be >= 1");
    if (resolution < 1) throw parameter_error("triplane resolution must be >= 1");
    size_t per_plane = size_t(resolution) * resolution * channels;
    for (auto& plane : planes_) plane.assign(per_plane, 0.0f);
}

std::pair<float, float> Triplane::value_range() const {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (const auto& plane : planes_)
        for (float v : plane) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    return {lo, hi};
}

namespace {

// Continuous texel coordinate -> integer corners and fraction, with border
// clamp. Handles resolution 1 (everything collapses to texel 0).
struct bilinear_axis {
    int i0, i1;
    float frac;
};

inline bilinear_axis clamp_axis(float u, int resolution) {
    u = clamp(u, 0.0f, float(resolution - 1));
    int i0 = int(std::floor(u));
    if (i0 > resolution - 2) i0 = std::max(resolution - 2, 0);
    int i1 = std::min(i0 + 1, resolution - 1);
    return {i0, i1, clamp(u - float(i0), 0.0f, 1.0f)};
}

}  // namespace

void sample_triplane(const Triplane& tp, const vec3f& x, std::span<float> out) {
    if (tp.empty()) throw structural_error("sample_triplane: empty triplane");
    if (out.size() != size_t(tp.channels()))
        throw structural_error("sample_triplane: output length " + std::to_string(out.size()) +
                               " != channel count " + std::to_string(tp.channels()));
    const int channels = tp.channels();
    const int res = tp.resolution();
    for (int c = 0; c < channels; c++) out[c] = 0.0f;

    for (int p = 0; p < 3; p++) {
        float a, b;
        plane_coords(plane_id(p), x.x, x.y, x.z, a, b);
        bilinear_axis au = clamp_axis(world_to_texel(a, res), res);
        bilinear_axis av = clamp_axis(world_to_texel(b, res), res);
        float w00 = (1 - au.frac) * (1 - av.frac);
        float w10 = au.frac * (1 - av.frac);
        float w01 = (1 - au.frac) * av.frac;
        float w11 = au.frac * av.frac;
        const float* t00 = tp.texel(p, av.i0, au.i0);
        const float* t10 = tp.texel(p, av.i0, au.i1);
        const float* t01 = tp.texel(p, av.i1, au.i0);
        const float* t11 = tp.texel(p, av.i1, au.i1);
        for (int c = 0; c < channels; c++)
            out[c] += w00 * t00[c] + w10 * t10[c] + w01 * t01[c] + w11 * t11[c];
    }
    for (int c = 0; c < channels; c++) out[c] /= 3.0f;
}

std::vector<float> sample_triplane(const Triplane& tp, const vec3f& x) {
    std::vector<float> out(size_t(std::max(tp.channels(), 0)));
    sample_triplane(tp, x, out);
    return out;
}

Triplane procedural_triplane(uint64_t seed, int channels, int resolution) {
    if (channels < 4) throw parameter_error("procedural_triplane: channels must be >= 4");
    if (resolution < 8) throw parameter_error("procedural_triplane: resolution must be >= 8");

    constexpr int kWaves = 4;
    Triplane tp(channels, resolution);
    const float inv_res = 1.0f / float(resolution);
    for (int p = 0; p < 3; p++) {
        for (int c = 0; c < channels; c++) {
            rng64 rng(mix_seed(seed, uint64_t(p) * 1000003u + uint64_t(c)));
            float fu[kWaves], fv[kWaves], phase[kWaves];
            for (int k = 0; k < kWaves; k++) {
                fu[k] = float(1 + rng.below(4));
                fv[k] = float(1 + rng.below(4));
                phase[k] = float(rng.uniform(0.0, 2.0 * kPi));
            }
            for (int v = 0; v < resolution; v++)
                for (int u = 0; u < resolution; u++) {
                    float s = 0;
                    for (int k = 0; k < kWaves; k++)
                        s += std::sin(2.0f * float(kPi) *
                                          (fu[k] * float(u) * inv_res + fv[k] * float(v) * inv_res) +
                                      phase[k]);
                    tp.at(p, c, v, u) = s * (1.0f / kWaves);
                }
        }
    }
    return tp;
}

void write_triplane(const Triplane& tp, const std::filesystem::path& path) {
    if (tp.empty()) throw structural_error("write_triplane: empty triplane");
    binary_writer out(path);
    out.magic("TRPL");
    out.u32(1);
    out.u32(uint32_t(tp.channels()));
    out.u32(uint32_t(tp.resolution()));
    const int channels = tp.channels();
    const int res = tp.resolution();
    std::vector<float> planar(size_t(channels) * res * res);
    for (int p = 0; p < 3; p++) {
        for (int c = 0; c < channels; c++)
            for (int v = 0; v < res; v++)
                for (int u = 0; u < res; u++)
                    planar[(size_t(c) * res + v) * res + u] = tp.at(p, c, v, u);
        out.f32_array(planar);
    }
    out.finish();
}

Triplane read_triplane(const std::filesystem::path& path) {
    binary_reader in(path);
    in.expect_magic("TRPL");
    in.expect_version(1);
    uint32_t channels = in.u32("channel count");
    uint32_t res = in.u32("resolution");
    if (channels < 1 || channels > (1u << 12) || res < 1 || res > (1u << 14))
        throw format_error(in.path() + ": implausible dimensions " + std::to_string(channels) +
                           "x" + std::to_string(res) + " at byte 8");
    Triplane tp(static_cast<int>(channels), static_cast<int>(res));
    std::vector<float> planar(size_t(channels) * res * res);
    for (int p = 0; p < 3; p++) {
        in.f32_array(planar, "plane payload");
        for (uint32_t c = 0; c < channels; c++)
            for (uint32_t v = 0; v < res; v++)
                for (uint32_t u = 0; u < res; u++) {
                    float value = planar[(size_t(c) * res + v) * res + u];
                    if (!std::isfinite(value))
                        throw format_error(in.path() + ": non-finite value in plane " +
                                           std::to_string(p));
                    tp.at(p, int(c), int(v), int(u)) = value;
                }
    }
    return tp;
}

}  // namespace trifuse
