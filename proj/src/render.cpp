// SPDX-License-Identifier: Apache-2.0

#include "trifuse/render.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "trifuse/error.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

void validate_render_config(const RenderConfig& cfg) {
    if (cfg.width < 1 || cfg.height < 1)
        throw parameter_error("render size must be at least 1x1");
    if (cfg.samples_per_ray < 2)
        throw parameter_error("samples_per_ray must be >= 2");
    if (!(cfg.t_near < cfg.t_far) || !std::isfinite(cfg.t_near) || !std::isfinite(cfg.t_far))
        throw parameter_error("require finite t_near < t_far");
    if (cfg.threads < 1) throw parameter_error("threads must be >= 1");
    if (!std::isfinite(cfg.background.x) || !std::isfinite(cfg.background.y) ||
        !std::isfinite(cfg.background.z))
        throw parameter_error("background color must be finite");
}

namespace {

constexpr int kTileSize = 32;
constexpr double kDepthEps = 1e-8;

struct render_output {
    ImageF* rgb;
    ImageF* feature;
    ImageF* depth;
    ImageF* alpha;
};

// Work shared by every tile worker; all state here is read-only except the
// output rasters, which workers touch only at their own tile's pixels.
struct render_job {
    const Field* field;
    const RenderConfig* cfg;
    const std::vector<ray>* rays;
    render_output out;
    int channels;  // 3 + extra feature channels actually produced
};

void render_pixel(const render_job& job, int x, int y, std::vector<double>& t_scratch) {
    const RenderConfig& cfg = *job.cfg;
    const ray& r = (*job.rays)[size_t(y) * cfg.width + x];
    const int n = cfg.samples_per_ray;
    const int channels = job.channels;
    const double dt = (cfg.t_far - cfg.t_near) / n;

    // Sample distances: deterministic interval midpoints, or one uniform
    // draw per stratum when jitter is enabled.
    t_scratch.resize(size_t(n));
    if (cfg.jitter) {
        rng64 rng(mix_seed(cfg.jitter_seed, uint64_t(y) * cfg.width + x));
        for (int i = 0; i < n; i++) t_scratch[i] = cfg.t_near + (i + rng.uniform()) * dt;
    } else {
        for (int i = 0; i < n; i++) t_scratch[i] = cfg.t_near + (i + 0.5) * dt;
    }

    double accum[kFeatureImageChannels] = {};
    double depth_acc = 0;
    double transmittance = 1.0;
    float sample[kFeatureImageChannels];

    for (int i = 0; i < n; i++) {
        double t = t_scratch[i];
        double delta = cfg.jitter ? (i + 1 < n ? t_scratch[i + 1] - t : cfg.t_far - t) : dt;
        vec3d p = r.origin + t * r.direction;
        if (cfg.warp) p = cfg.warp(p);

        float sigma = job.field->evaluate(to_float(p), std::span<float>(sample, size_t(channels)));
        bool finite = std::isfinite(sigma);
        for (int c = 0; finite && c < channels; c++) finite = std::isfinite(sample[c]);
        if (!finite)
            throw numerical_error("non-finite field output at pixel (" + std::to_string(x) +
                                  ", " + std::to_string(y) + ")");

        double alpha = 1.0 - std::exp(-double(sigma) * delta);
        double weight = transmittance * alpha;
        for (int c = 0; c < channels; c++) accum[c] += weight * sample[c];
        depth_acc += weight * t;
        transmittance *= 1.0 - alpha;
    }

    double alpha_total = 1.0 - transmittance;
    double bg[3] = {cfg.background.x, cfg.background.y, cfg.background.z};
    for (int c = 0; c < 3; c++) {
        float v = float(accum[c] + transmittance * bg[c]);
        job.out.rgb->at(c, y, x) = v;
        job.out.feature->at(c, y, x) = v;
    }
    for (int c = 3; c < channels; c++) job.out.feature->at(c, y, x) = float(accum[c]);
    job.out.depth->at(0, y, x) = float(depth_acc / std::max(alpha_total, kDepthEps));
    job.out.alpha->at(0, y, x) = float(alpha_total);
}

void render_tiles(const render_job& job, std::atomic<int>& next_tile, std::atomic<bool>& stop,
                  int tiles_x, int tile_count) {
    std::vector<double> t_scratch;
    for (;;) {
        int tile = next_tile.fetch_add(1);
        if (tile >= tile_count || stop.load()) return;
        int x0 = (tile % tiles_x) * kTileSize;
        int y0 = (tile / tiles_x) * kTileSize;
        int x1 = std::min(x0 + kTileSize, job.cfg->width);
        int y1 = std::min(y0 + kTileSize, job.cfg->height);
        for (int y = y0; y < y1; y++)
            for (int x = x0; x < x1; x++) render_pixel(job, x, y, t_scratch);
    }
}

}  // namespace

RenderedImage render(const Field& field, const Camera& cam, const RenderConfig& cfg) {
    validate_render_config(cfg);
    int extra = field.extra_channels();
    if (extra < 0 || extra > kFeatureImageChannels - 3)
        throw structural_error("field produces " + std::to_string(extra) +
                               " extra channels; the feature image fits at most " +
                               std::to_string(kFeatureImageChannels - 3));

    std::vector<ray> rays = generate_rays(cam, cfg.width, cfg.height);
    RenderedImage img{ImageF(3, cfg.height, cfg.width),
                      ImageF(kFeatureImageChannels, cfg.height, cfg.width),
                      ImageF(1, cfg.height, cfg.width), ImageF(1, cfg.height, cfg.width)};

    render_job job{&field, &cfg, &rays,
                   {&img.rgb, &img.feature, &img.depth, &img.alpha}, 3 + extra};

    int tiles_x = (cfg.width + kTileSize - 1) / kTileSize;
    int tiles_y = (cfg.height + kTileSize - 1) / kTileSize;
    int tile_count = tiles_x * tiles_y;
    int workers = std::min(cfg.threads, tile_count);

    std::atomic<int> next_tile{0};
    std::atomic<bool> stop{false};
    if (workers <= 1) {
        render_tiles(job, next_tile, stop, tiles_x, tile_count);
    } else {
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; w++)
            pool.emplace_back([&] {
                try {
                    render_tiles(job, next_tile, stop, tiles_x, tile_count);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    stop.store(true);
                }
            });
        for (std::thread& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    return img;
}

ImageF render_depth(const Field& field, const Camera& cam, const RenderConfig& cfg) {
    RenderedImage img = render(field, cam, cfg);
    constexpr float invalid = std::numeric_limits<float>::quiet_NaN();
    for (int y = 0; y < cfg.height; y++)
        for (int x = 0; x < cfg.width; x++)
            if (img.alpha.at(0, y, x) < 0.5f) img.depth.at(0, y, x) = invalid;
    return std::move(img.depth);
}

bool depth_valid(float d) { return std::isfinite(d) && d >= 0; }

ImageF encode_depth(const ImageF& depth) {
    ImageF out = depth;
    for (float& v : out.values())
        if (!depth_valid(v)) v = -1.0f;
    return out;
}

ImageF decode_depth(const ImageF& depth) {
    ImageF out = depth;
    for (float& v : out.values())
        if (!depth_valid(v)) v = std::numeric_limits<float>::quiet_NaN();
    return out;
}

}  // namespace trifuse
