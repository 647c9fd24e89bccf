// SPDX-License-Identifier: Apache-2.0

#include "trifuse/mlp.hpp"

#include <cmath>
#include <string>

#include "trifuse/binio.hpp"
#include "trifuse/error.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

void validate_mlp(const MlpWeights& weights) {
    if (weights.layers.empty()) throw structural_error("mlp has no layers");
    int prev = weights.layers.front().in;
    for (size_t k = 0; k < weights.layers.size(); k++) {
        const mlp_layer& layer = weights.layers[k];
        std::string where = "mlp layer " + std::to_string(k);
        if (layer.in < 1 || layer.out < 1)
            throw structural_error(where + ": non-positive dimension");
        if (layer.in > kMaxMlpWidth || layer.out > kMaxMlpWidth)
            throw structural_error(where + ": wider than " + std::to_string(kMaxMlpWidth));
        if (layer.in != prev)
            throw structural_error(where + ": input width " + std::to_string(layer.in) +
                                   " does not match previous output " + std::to_string(prev));
        if (layer.weight.size() != size_t(layer.in) * layer.out ||
            layer.bias.size() != size_t(layer.out))
            throw structural_error(where + ": weight/bias sizes do not match dimensions");
        for (float w : layer.weight)
            if (!std::isfinite(w)) throw structural_error(where + ": non-finite weight");
        for (float b : layer.bias)
            if (!std::isfinite(b)) throw structural_error(where + ": non-finite bias");
        prev = layer.out;
    }
    if (prev < 4)
        throw structural_error("mlp output width " + std::to_string(prev) +
                               " < 4 (need density + color)");
}

namespace {

inline float leaky_relu(float x) { return x > 0 ? x : 0.01f * x; }

inline float softplus(float x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline float logistic(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace

float decode_mlp_into(const MlpWeights& weights, std::span<const float> feature,
                      std::span<float> out) {
    if (feature.size() != size_t(weights.input_channels()))
        throw structural_error("decode_mlp: input length " + std::to_string(feature.size()) +
                               " != mlp input width " + std::to_string(weights.input_channels()));
    if (out.size() != size_t(weights.output_channels() - 1))
        throw structural_error("decode_mlp: output span length " + std::to_string(out.size()) +
                               " != color+feature width " +
                               std::to_string(weights.output_channels() - 1));

    float buf_a[kMaxMlpWidth], buf_b[kMaxMlpWidth];
    float* cur = buf_a;
    float* nxt = buf_b;
    for (size_t i = 0; i < feature.size(); i++) cur[i] = feature[i];

    const size_t last = weights.layers.size() - 1;
    for (size_t k = 0; k < weights.layers.size(); k++) {
        const mlp_layer& layer = weights.layers[k];
        const float* w = layer.weight.data();
        for (int o = 0; o < layer.out; o++) {
            // Double accumulation keeps the decode within 1e-7 of a full
            // double-precision pass, which the test tolerances rely on.
            double acc = layer.bias[o];
            const float* row = w + size_t(o) * layer.in;
            for (int i = 0; i < layer.in; i++) acc += double(row[i]) * cur[i];
            nxt[o] = k == last ? float(acc) : leaky_relu(float(acc));
        }
        std::swap(cur, nxt);
    }

    float sigma = softplus(cur[0]);
    out[0] = logistic(cur[1]);
    out[1] = logistic(cur[2]);
    out[2] = logistic(cur[3]);
    for (size_t i = 3; i < out.size(); i++) out[i] = cur[i + 1];
    return sigma;
}

mlp_output decode_mlp(const MlpWeights& weights, std::span<const float> feature) {
    validate_mlp(weights);
    mlp_output result;
    std::vector<float> out(size_t(weights.output_channels() - 1));
    result.sigma = decode_mlp_into(weights, feature, out);
    result.color = {out[0], out[1], out[2]};
    result.feature.assign(out.begin() + 3, out.end());
    return result;
}

MlpWeights default_mlp_weights(uint64_t seed, int in_channels, int feature_channels,
                               int hidden_width, int hidden_depth) {
    if (in_channels < 1 || feature_channels < 0 || hidden_width < 1 || hidden_depth < 0)
        throw parameter_error("default_mlp_weights: non-positive dimension");

    std::vector<std::pair<int, int>> dims;
    int prev = in_channels;
    for (int k = 0; k < hidden_depth; k++) {
        dims.emplace_back(prev, hidden_width);
        prev = hidden_width;
    }
    dims.emplace_back(prev, 4 + feature_channels);

    MlpWeights weights;
    for (size_t k = 0; k < dims.size(); k++) {
        auto [in, out] = dims[k];
        mlp_layer layer;
        layer.in = in;
        layer.out = out;
        layer.weight.resize(size_t(in) * out);
        layer.bias.resize(size_t(out));
        double scale = std::sqrt(6.0 / double(in + out));
        rng64 wrng(mix_seed(seed, 2 * k));
        for (float& w : layer.weight) w = float(wrng.uniform(-scale, scale));
        rng64 brng(mix_seed(seed, 2 * k + 1));
        for (float& b : layer.bias) b = float(brng.uniform(-0.1, 0.1));
        weights.layers.push_back(std::move(layer));
    }
    validate_mlp(weights);
    return weights;
}

void write_mlp(const MlpWeights& weights, const std::filesystem::path& path) {
    validate_mlp(weights);
    binary_writer out(path);
    out.magic("MLPW");
    out.u32(1);
    out.u32(uint32_t(weights.layers.size()));
    for (const mlp_layer& layer : weights.layers) {
        out.u32(uint32_t(layer.in));
        out.u32(uint32_t(layer.out));
        out.f32_array(layer.weight);
        out.f32_array(layer.bias);
    }
    out.finish();
}

MlpWeights read_mlp(const std::filesystem::path& path) {
    binary_reader in(path);
    in.expect_magic("MLPW");
    in.expect_version(1);
    uint32_t count = in.u32("layer count");
    if (count == 0 || count > 64)
        throw format_error(in.path() + ": implausible layer count " + std::to_string(count));
    MlpWeights weights;
    for (uint32_t k = 0; k < count; k++) {
        mlp_layer layer;
        uint32_t lin = in.u32("layer input width");
        uint32_t lout = in.u32("layer output width");
        if (lin < 1 || lin > uint32_t(kMaxMlpWidth) || lout < 1 || lout > uint32_t(kMaxMlpWidth))
            throw format_error(in.path() + ": implausible layer dimensions at byte " +
                               std::to_string(in.offset() - 8));
        layer.in = int(lin);
        layer.out = int(lout);
        layer.weight.resize(size_t(lin) * lout);
        layer.bias.resize(lout);
        in.f32_array(layer.weight, "layer weights");
        in.f32_array(layer.bias, "layer biases");
        weights.layers.push_back(std::move(layer));
    }
    try {
        validate_mlp(weights);
    } catch (const structural_error& e) {
        throw format_error(in.path() + ": " + e.what());
    }
    return weights;
}

}  // namespace trifuse
