// SPDX-License-Identifier: Apache-2.0

#include "trifuse/fusion.hpp"

#include <cmath>
#include <string>

#include "trifuse/binio.hpp"
#include "trifuse/error.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

FlowField::FlowField(int res) : resolution(res) {
    if (res < 1) throw parameter_error("flow resolution must be >= 1");
    for (auto& plane : planes) plane.assign(size_t(2) * res * res, 0.0f);
}

FlowField procedural_flow(uint64_t seed, int resolution, float magnitude) {
    if (!(magnitude >= 0)) throw parameter_error("flow magnitude must be >= 0");
    constexpr int kWaves = 3;
    FlowField flow(resolution);
    const float inv_res = 1.0f / float(resolution);
    for (int p = 0; p < 3; p++)
        for (int ch = 0; ch < 2; ch++) {
            rng64 rng(mix_seed(seed, uint64_t(p) * 2 + ch));
            float fu[kWaves], fv[kWaves], phase[kWaves];
            for (int k = 0; k < kWaves; k++) {
                fu[k] = float(1 + rng.below(3));
                fv[k] = float(1 + rng.below(3));
                phase[k] = float(rng.uniform(0.0, 2.0 * kPi));
            }
            for (int v = 0; v < resolution; v++)
                for (int u = 0; u < resolution; u++) {
                    float s = 0;
                    for (int k = 0; k < kWaves; k++)
                        s += std::sin(2.0f * float(kPi) *
                                          (fu[k] * u * inv_res + fv[k] * v * inv_res) +
                                      phase[k]);
                    flow.at(plane_id(p), ch, v, u) = magnitude * s * (1.0f / kWaves);
                }
        }
    return flow;
}

void write_flow(const FlowField& flow, const std::filesystem::path& path) {
    if (flow.resolution < 1) throw structural_error("write_flow: empty flow field");
    binary_writer out(path);
    out.magic("FLOW");
    out.u32(1);
    out.u32(uint32_t(flow.resolution));
    for (const auto& plane : flow.planes) out.f32_array(plane);
    out.finish();
}

FlowField read_flow(const std::filesystem::path& path) {
    binary_reader in(path);
    in.expect_magic("FLOW");
    in.expect_version(1);
    uint32_t res = in.u32("resolution");
    if (res < 1 || res > (1u << 14))
        throw format_error(in.path() + ": implausible resolution at byte 8");
    FlowField flow(static_cast<int>(res));
    for (auto& plane : flow.planes) in.f32_array(plane, "plane payload");
    for (const auto& plane : flow.planes)
        for (float v : plane)
            if (!std::isfinite(v)) throw format_error(in.path() + ": non-finite displacement");
    return flow;
}

namespace {

// Bilinear tap in texel coordinates with border clamp; weights shared across
// all channels of one texel.
struct bilinear_tap {
    int u0, u1, v0, v1;
    float w00, w10, w01, w11;
};

bilinear_tap make_tap(float u, float v, int resolution) {
    u = clamp(u, 0.0f, float(resolution - 1));
    v = clamp(v, 0.0f, float(resolution - 1));
    int u0 = std::min(int(std::floor(u)), std::max(resolution - 2, 0));
    int v0 = std::min(int(std::floor(v)), std::max(resolution - 2, 0));
    int u1 = std::min(u0 + 1, resolution - 1);
    int v1 = std::min(v0 + 1, resolution - 1);
    float fu = clamp(u - float(u0), 0.0f, 1.0f);
    float fv = clamp(v - float(v0), 0.0f, 1.0f);
    return {u0, u1, v0, v1, (1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
}

}  // namespace

Triplane warp_triplane(const Triplane& tp, const FlowField& flow) {
    if (tp.empty()) throw structural_error("warp_triplane: empty triplane");
    if (tp.resolution() != flow.resolution)
        throw structural_error("warp_triplane: triplane resolution " +
                               std::to_string(tp.resolution()) + " != flow resolution " +
                               std::to_string(flow.resolution));
    const int res = tp.resolution();
    const int channels = tp.channels();
    Triplane out(channels, res);
    for (int p = 0; p < 3; p++)
        for (int v = 0; v < res; v++)
            for (int u = 0; u < res; u++) {
                float su = float(u) + flow.at(plane_id(p), 0, v, u);
                float sv = float(v) + flow.at(plane_id(p), 1, v, u);
                bilinear_tap tap = make_tap(su, sv, res);
                const float* t00 = tp.texel(p, tap.v0, tap.u0);
                const float* t10 = tp.texel(p, tap.v0, tap.u1);
                const float* t01 = tp.texel(p, tap.v1, tap.u0);
                const float* t11 = tp.texel(p, tap.v1, tap.u1);
                for (int c = 0; c < channels; c++)
                    out.at(p, c, v, u) = tap.w00 * t00[c] + tap.w10 * t10[c] +
                                         tap.w01 * t01[c] + tap.w11 * t11[c];
            }
    return out;
}

MaskTriplane box_blur_mask(const MaskTriplane& mask, int radius) {
    if (radius < 0) throw parameter_error("box_blur_mask: negative radius");
    if (radius == 0) return mask;
    const int res = mask.resolution;
    MaskTriplane out(res);
    for (int p = 0; p < 3; p++) {
        // Summed-area table with a one-texel zero border.
        std::vector<double> sat(size_t(res + 1) * (res + 1), 0.0);
        for (int v = 0; v < res; v++)
            for (int u = 0; u < res; u++)
                sat[size_t(v + 1) * (res + 1) + u + 1] =
                    double(mask.planes[p][size_t(v) * res + u]) +
                    sat[size_t(v) * (res + 1) + u + 1] + sat[size_t(v + 1) * (res + 1) + u] -
                    sat[size_t(v) * (res + 1) + u];
        for (int v = 0; v < res; v++)
            for (int u = 0; u < res; u++) {
                int u0 = std::max(0, u - radius), u1 = std::min(res - 1, u + radius);
                int v0 = std::max(0, v - radius), v1 = std::min(res - 1, v + radius);
                double sum = sat[size_t(v1 + 1) * (res + 1) + u1 + 1] -
                             sat[size_t(v0) * (res + 1) + u1 + 1] -
                             sat[size_t(v1 + 1) * (res + 1) + u0] +
                             sat[size_t(v0) * (res + 1) + u0];
                int count = (u1 - u0 + 1) * (v1 - v0 + 1);
                out.at(plane_id(p), v, u) = float(sum / count);
            }
    }
    return out;
}

Triplane fuse_triplanes(const Triplane& undist, const Triplane& prior,
                        const VisibilityTriplane& vis_undist,
                        const VisibilityTriplane& vis_prior, int smooth_radius) {
    if (undist.empty() || prior.empty()) throw structural_error("fuse_triplanes: empty triplane");
    if (undist.channels() != prior.channels() || undist.resolution() != prior.resolution())
        throw structural_error("fuse_triplanes: triplane shape mismatch");
    const int res = undist.resolution();
    const int channels = undist.channels();

    MaskTriplane vin = vis_undist.resolution == res ? vis_undist : resample_mask(vis_undist, res);
    MaskTriplane vpr = vis_prior.resolution == res ? vis_prior : resample_mask(vis_prior, res);
    MaskTriplane weight = smooth_radius > 0 ? box_blur_mask(vin, smooth_radius) : vin;

    Triplane fused(channels, res);
    for (int p = 0; p < 3; p++)
        for (int v = 0; v < res; v++)
            for (int u = 0; u < res; u++) {
                float w = weight.at(plane_id(p), v, u);
                float pv = vpr.at(plane_id(p), v, u);
                for (int c = 0; c < channels; c++) {
                    float tu = undist.at(p, c, v, u);
                    float tp = prior.at(p, c, v, u);
                    fused.at(p, c, v, u) = w * tu + (1 - w) * (pv * tp + (1 - pv) * tu);
                }
            }
    return fused;
}

namespace {

void require_same_shape(const Triplane& a, const Triplane& b, const char* who) {
    if (a.empty() || b.empty()) throw structural_error(std::string(who) + ": empty triplane");
    if (a.channels() != b.channels() || a.resolution() != b.resolution())
        throw structural_error(std::string(who) + ": triplane shape mismatch");
}

double mean_abs_diff(std::span<const float> a, std::span<const float> b) {
    double acc = 0;
    for (size_t k = 0; k < a.size(); k++) acc += std::abs(double(a[k]) - double(b[k]));
    return acc / double(a.size());
}

}  // namespace

double loss_undist(const Triplane& undist, const Triplane& gt) {
    require_same_shape(undist, gt, "loss_undist");
    double acc = 0;
    size_t count = 0;
    for (int p = 0; p < 3; p++) {
        auto a = undist.plane_values(p), b = gt.plane_values(p);
        acc += mean_abs_diff(a, b) * double(a.size());
        count += a.size();
    }
    return acc / double(count);
}

double loss_vis(const VisibilityTriplane& raw, const VisibilityTriplane& raw_gt,
                const VisibilityTriplane& prior, const VisibilityTriplane& prior_gt) {
    if (raw.resolution != raw_gt.resolution || prior.resolution != prior_gt.resolution)
        throw structural_error("loss_vis: resolution mismatch");
    double raw_term = 0, prior_term = 0;
    for (int p = 0; p < 3; p++) {
        raw_term += mean_abs_diff(raw.planes[p], raw_gt.planes[p]);
        prior_term += mean_abs_diff(prior.planes[p], prior_gt.planes[p]);
    }
    return raw_term / 3.0 + prior_term / 3.0;
}

double loss_fusion(const Triplane& fused, const Triplane& gt,
                   const VisibilityTriplane& vis_gt, const OcclusionMask& occ_mask) {
    require_same_shape(fused, gt, "loss_fusion");
    const int res = fused.resolution();
    MaskTriplane vis = vis_gt.resolution == res ? vis_gt : resample_mask(vis_gt, res);
    MaskTriplane occ = occ_mask.resolution == res ? occ_mask : resample_mask(occ_mask, res);
    const int channels = fused.channels();
    double acc = 0;
    for (int p = 0; p < 3; p++)
        for (int v = 0; v < res; v++)
            for (int u = 0; u < res; u++) {
                double w = 1.0 + double(vis.at(plane_id(p), v, u)) +
                           double(occ.at(plane_id(p), v, u));
                for (int c = 0; c < channels; c++)
                    acc += std::abs(double(fused.at(p, c, v, u)) - double(gt.at(p, c, v, u))) * w;
            }
    return acc / (3.0 * double(channels) * double(res) * double(res));
}

double loss_total(double undist, double vis, double fusion, double render,
                  const LossWeights& w) {
    if (!(w.undist >= 0) || !(w.vis >= 0) || !(w.fusion >= 0) || !(w.render >= 0) ||
        !std::isfinite(w.undist) || !std::isfinite(w.vis) || !std::isfinite(w.fusion) ||
        !std::isfinite(w.render))
        throw parameter_error("loss weights must be finite and >= 0");
    if (!std::isfinite(undist) || !std::isfinite(vis) || !std::isfinite(fusion) ||
        !std::isfinite(render))
        throw numerical_error("loss components must be finite");
    return w.undist * undist + w.vis * vis + w.fusion * fusion + w.render * render;
}

}  // namespace trifuse
