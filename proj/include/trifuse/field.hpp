// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "trifuse/math.hpp"
#include "trifuse/mlp.hpp"
#include "trifuse/triplane.hpp"

namespace trifuse {

// A volumetric scene the renderer can march through. evaluate() fills `out`
// with 3 + extra_channels() values (color first, extra feature channels after)
// and returns the density at `position`. Implementations must be safe for
// concurrent read-only evaluation.
class Field {
  public:
    virtual ~Field() = default;

    virtual float evaluate(const vec3f& position, std::span<float> out) const = 0;
    virtual int extra_channels() const { return 0; }
};

// Sum of axis-aligned anisotropic Gaussian density bumps. Density is
// sum_b peak_b * exp(-0.5 * sum_k ((x_k - center_k) / scale_k)^2); color is
// the density-weighted mean of the blob colors.
struct blob {
    vec3f center = {0, 0, 0};
    vec3f scale = {0.1f, 0.1f, 0.1f};  // per-axis standard deviations, > 0
    float peak = 1;                    // density at the blob center, >= 0
    vec3f color = {1, 1, 1};
};

class AnalyticBlobField : public Field {
  public:
    AnalyticBlobField() = default;
    explicit AnalyticBlobField(std::vector<blob> blobs);

    float evaluate(const vec3f& position, std::span<float> out) const override;

    const std::vector<blob>& blobs() const { return blobs_; }

  private:
    std::vector<blob> blobs_;
};

// Uniform density sigma0 inside an axis-aligned box, vacuum outside.
class ConstantSlab : public Field {
  public:
    ConstantSlab(const vec3f& box_min, const vec3f& box_max, float sigma0,
                 const vec3f& color = {1, 1, 1});

    float evaluate(const vec3f& position, std::span<float> out) const override;

  private:
    vec3f box_min_, box_max_;
    float sigma0_;
    vec3f color_;
};

// Triplane-backed field: sample the planes, average, decode through the MLP.
// Owns its triplane and weights; construct with std::move to avoid copies.
class TriplaneField : public Field {
  public:
    TriplaneField(Triplane triplane, MlpWeights weights);

    float evaluate(const vec3f& position, std::span<float> out) const override;
    int extra_channels() const override { return weights_.feature_channels(); }

    const Triplane& triplane() const { return triplane_; }
    const MlpWeights& weights() const { return weights_; }

  private:
    Triplane triplane_;
    MlpWeights weights_;
};

}  // namespace trifuse
