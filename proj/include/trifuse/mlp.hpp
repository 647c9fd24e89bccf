// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "trifuse/math.hpp"

namespace trifuse {

// Widest layer the decoder supports; lets the hot path use stack buffers.
inline constexpr int kMaxMlpWidth = 256;

// One dense layer: `weight` is out×in row-major, `bias` has `out` entries.
struct mlp_layer {
    int in = 0;
    int out = 0;
    std::vector<float> weight;
    std::vector<float> bias;
};

// A small dense network decoding a sampled plane feature into density, color
// and extra feature channels. The final layer emits 4 + F values laid out as
// [density_raw, r_raw, g_raw, b_raw, feature...]; density passes through
// softplus, color through the logistic function, features stay linear.
struct MlpWeights {
    std::vector<mlp_layer> layers;

    int input_channels() const { return layers.empty() ? 0 : layers.front().in; }
    int output_channels() const { return layers.empty() ? 0 : layers.back().out; }
    int feature_channels() const { return output_channels() - 4; }
};

// Throws a structural error if layer dimensions do not compose, a layer is
// wider than kMaxMlpWidth, the output width is < 4, or any value is non-finite.
void validate_mlp(const MlpWeights& weights);

// Decoded density/color; the extra feature channels are written separately.
struct mlp_output {
    float sigma = 0;
    vec3f color = {0, 0, 0};
    std::vector<float> feature;
};

// Runs the network on a mean plane feature. `out` receives the 3 + F color and
// feature channels (color first); the return value is the density. `feature`
// must have length input_channels() and `out` length output_channels() - 1.
float decode_mlp_into(const MlpWeights& weights, std::span<const float> feature,
                      std::span<float> out);

// Convenience wrapper returning an owning result.
mlp_output decode_mlp(const MlpWeights& weights, std::span<const float> feature);

// Deterministic seeded weights: hidden_depth layers of hidden_width with
// fan-balanced uniform init, then a 4 + feature_channels output layer. Same
// seed gives bit-identical weights.
MlpWeights default_mlp_weights(uint64_t seed, int in_channels = 32, int feature_channels = 29,
                               int hidden_width = 16, int hidden_depth = 2);

// Binary format: magic "MLPW", u32 version (1), u32 layer count, then per
// layer u32 in, u32 out, f32 weight[out*in] row-major, f32 bias[out].
void write_mlp(const MlpWeights& weights, const std::filesystem::path& path);
MlpWeights read_mlp(const std::filesystem::path& path);

}  // namespace trifuse
