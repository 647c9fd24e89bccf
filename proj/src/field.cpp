// SPDX-License-Identifier: Apache-2.0

#include "trifuse/field.hpp"

#include <cmath>
#include <string>

#include "trifuse/error.hpp"

namespace trifuse {

AnalyticBlobField::AnalyticBlobField(std::vector<blob> blobs) : blobs_(std::move(blobs)) {
    for (const blob& b : blobs_) {
        if (!(b.scale.x > 0 && b.scale.y > 0 && b.scale.z > 0))
            throw parameter_error("blob scales must be > 0");
        if (!(b.peak >= 0)) throw parameter_error("blob peak density must be >= 0");
    }
}

float AnalyticBlobField::evaluate(const vec3f& position, std::span<float> out) const {
    float sigma = 0;
    float r = 0, g = 0, b = 0;
    for (const blob& bl : blobs_) {
        float dx = (position.x - bl.center.x) / bl.scale.x;
        float dy = (position.y - bl.center.y) / bl.scale.y;
        float dz = (position.z - bl.center.z) / bl.scale.z;
        float density = bl.peak * std::exp(-0.5f * (dx * dx + dy * dy + dz * dz));
        sigma += density;
        r += density * bl.color.x;
        g += density * bl.color.y;
        b += density * bl.color.z;
    }
    float inv = sigma > 1e-20f ? 1.0f / sigma : 0.0f;
    out[0] = r * inv;
    out[1] = g * inv;
    out[2] = b * inv;
    return sigma;
}

ConstantSlab::ConstantSlab(const vec3f& box_min, const vec3f& box_max, float sigma0,
                           const vec3f& color)
    : box_min_(box_min), box_max_(box_max), sigma0_(sigma0), color_(color) {
    if (!(box_min.x < box_max.x && box_min.y < box_max.y && box_min.z < box_max.z))
        throw parameter_error("slab box must have positive extent");
    if (!(sigma0 >= 0)) throw parameter_error("slab density must be >= 0");
}

float ConstantSlab::evaluate(const vec3f& position, std::span<float> out) const {
    out[0] = color_.x;
    out[1] = color_.y;
    out[2] = color_.z;
    bool inside = position.x >= box_min_.x && position.x <= box_max_.x &&
                  position.y >= box_min_.y && position.y <= box_max_.y &&
                  position.z >= box_min_.z && position.z <= box_max_.z;
    return inside ? sigma0_ : 0.0f;
}

TriplaneField::TriplaneField(Triplane triplane, MlpWeights weights)
    : triplane_(std::move(triplane)), weights_(std::move(weights)) {
    validate_mlp(weights_);
    if (triplane_.channels() != weights_.input_channels())
        throw structural_error("triplane channel count " + std::to_string(triplane_.channels()) +
                               " != mlp input width " +
                               std::to_string(weights_.input_channels()));
}

float TriplaneField::evaluate(const vec3f& position, std::span<float> out) const {
    float mean[kMaxMlpWidth];
    sample_triplane(triplane_, position, std::span<float>(mean, size_t(triplane_.channels())));
    return decode_mlp_into(weights_, std::span<const float>(mean, size_t(triplane_.channels())),
                           out);
}

}  // namespace trifuse
