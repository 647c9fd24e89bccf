// SPDX-License-Identifier: Apache-2.0

#include "trifuse/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "trifuse/error.hpp"
#include "trifuse/image.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

CameraRig make_rig(int n_views, double radius, double spread_deg, double focal) {
    if (n_views < 2) throw parameter_error("make_rig: need at least 2 views");
    if (!(radius > 0)) throw parameter_error("make_rig: radius must be > 0");
    if (!(spread_deg > 0) || spread_deg >= 90)
        throw parameter_error("make_rig: spread must be in (0, 90) degrees");

    std::vector<double> yaws(static_cast<size_t>(n_views));
    for (int k = 0; k < n_views; k++)
        yaws[k] = -spread_deg + 2.0 * spread_deg * k / double(n_views - 1);
    // Most-frontal camera first so index 0 is the canonical frontal view
    // (ties, e.g. +-10 degrees for an even count, resolve to the negative side).
    std::sort(yaws.begin(), yaws.end(), [](double a, double b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
    });

    CameraRig rig;
    rig.radius = radius;
    rig.spread_deg = spread_deg;
    rig.yaws_deg = yaws;
    for (double yaw_deg : yaws) {
        double yaw = radians(yaw_deg);
        vec3d eye{radius * std::sin(yaw), 0.0, radius * std::cos(yaw)};
        rig.cameras.push_back(look_at_camera(eye, {0, 0, 0}, {0, 1, 0}, focal));
    }
    return rig;
}

DynamicScene::DynamicScene(uint64_t seed, int blob_count, int frames)
    : seed_(seed), frames_(frames) {
    if (blob_count < 1) throw parameter_error("make_scene: need at least 1 blob");
    if (frames < 1) throw parameter_error("make_scene: need at least 1 frame");

    for (int k = 0; k < blob_count; k++) {
        rng64 rng(mix_seed(seed, uint64_t(k)));
        blob b;
        b.center = {float(rng.uniform(-0.35, 0.35)), float(rng.uniform(-0.35, 0.35)),
                    float(rng.uniform(-0.35, 0.35))};
        b.scale = {float(rng.uniform(0.05, 0.15)), float(rng.uniform(0.05, 0.15)),
                   float(rng.uniform(0.05, 0.15))};
        b.peak = float(rng.uniform(6.0, 14.0));
        b.color = {float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.1, 1.0)),
                   float(rng.uniform(0.1, 1.0))};
        base_.push_back(b);

        // Sinusoidal per-blob motion, one cycle over the clip. The per-axis
        // amplitude cap keeps both the offset and the frame-to-frame
        // displacement below 0.08 world units for every frame count.
        track tr;
        tr.offset_amp = {float(rng.uniform(0.005, 0.025) * (rng.below(2) ? 1 : -1)),
                         float(rng.uniform(0.005, 0.025) * (rng.below(2) ? 1 : -1)),
                         float(rng.uniform(0.005, 0.025) * (rng.below(2) ? 1 : -1))};
        tr.density_amp = float(rng.uniform(0.0, 0.2));
        tracks_.push_back(tr);
    }
}

AnalyticBlobField DynamicScene::frame_field(int t) const {
    if (t < 0 || t >= frames_)
        throw parameter_error("frame index " + std::to_string(t) + " outside 0.." +
                              std::to_string(frames_ - 1));
    std::vector<blob> blobs = base_;
    float phase = float(2.0 * kPi * t / double(frames_));
    float s = std::sin(phase);
    for (size_t k = 0; k < blobs.size(); k++) {
        const track& tr = tracks_[k];
        blobs[k].center = blobs[k].center + s * tr.offset_amp;
        blobs[k].peak *= 1.0f + tr.density_amp * s;
    }
    return AnalyticBlobField(std::move(blobs));
}

DynamicScene make_scene(uint64_t seed, int blob_count, int frames) {
    return DynamicScene(seed, blob_count, frames);
}

namespace {

// Write to a sibling temp file, then rename: reruns can never leave a
// half-written image behind. The temp name keeps the extension because the
// image writers dispatch on it.
template <typename WriteFn>
void write_atomic(const std::filesystem::path& path, WriteFn&& write_fn) {
    std::filesystem::path tmp = path.parent_path() / (".tmp_" + path.filename().string());
    write_fn(tmp);
    std::filesystem::rename(tmp, path);
}

}  // namespace

DatasetManifest generate_dataset(const DynamicScene& scene, const CameraRig& rig,
                                 const RenderConfig& cfg,
                                 const std::filesystem::path& out_dir) {
    validate_render_config(cfg);
    if (rig.cameras.empty()) throw parameter_error("generate_dataset: empty rig");
    std::filesystem::create_directories(out_dir);

    DatasetManifest manifest;
    manifest.n_views = int(rig.cameras.size());
    manifest.n_frames = scene.frames();
    manifest.seed = scene.seed();
    manifest.blob_count = scene.blob_count();
    manifest.width = cfg.width;
    manifest.height = cfg.height;
    manifest.samples_per_ray = cfg.samples_per_ray;
    manifest.t_near = cfg.t_near;
    manifest.t_far = cfg.t_far;
    manifest.background = cfg.background;
    manifest.rig_radius = rig.radius;
    manifest.rig_spread_deg = rig.spread_deg;
    manifest.rig_focal = rig.cameras.front().intrinsic(0, 0);

    for (int j = 0; j < manifest.n_views; j++) {
        std::string name = "camera_view" + std::to_string(j) + ".json";
        write_atomic(out_dir / name,
                     [&](const std::filesystem::path& p) { write_camera(rig.cameras[j], p); });
    }

    for (int t = 0; t < manifest.n_frames; t++) {
        AnalyticBlobField field = scene.frame_field(t);
        for (int j = 0; j < manifest.n_views; j++) {
            RenderedImage img = render(field, rig.cameras[j], cfg);
            std::string name =
                "view" + std::to_string(j) + "_frame" + std::to_string(t) + ".png";
            write_atomic(out_dir / name,
                         [&](const std::filesystem::path& p) { write_rgb8(img.rgb, p); });
            manifest.frames.push_back(
                {t, j, name, "camera_view" + std::to_string(j) + ".json"});
        }
    }

    // The reference is the frontal view of frame 0; copying the rendered file
    // keeps it byte-identical to view0_frame0.png.
    manifest.reference = "reference.png";
    write_atomic(out_dir / manifest.reference, [&](const std::filesystem::path& p) {
        std::filesystem::copy_file(out_dir / "view0_frame0.png", p,
                                   std::filesystem::copy_options::overwrite_existing);
    });

    write_atomic(out_dir / "manifest.json",
                 [&](const std::filesystem::path& p) { write_manifest(manifest, p); });
    return manifest;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    nlohmann::json j;
    j["n_views"] = m.n_views;
    j["n_frames"] = m.n_frames;
    j["seed"] = m.seed;
    j["blob_count"] = m.blob_count;
    j["reference"] = m.reference;
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& e : m.frames)
        frames.push_back({{"t", e.t}, {"view", e.view}, {"path", e.path}, {"camera", e.camera}});
    j["frames"] = frames;
    j["render"] = {{"width", m.width},
                   {"height", m.height},
                   {"samples_per_ray", m.samples_per_ray},
                   {"t_near", m.t_near},
                   {"t_far", m.t_far},
                   {"background", {m.background.x, m.background.y, m.background.z}}};
    j["rig"] = {{"radius", m.rig_radius},
                {"spread_deg", m.rig_spread_deg},
                {"focal", m.rig_focal}};
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw format_error(path.string() + ": " + e.what());
    }
    DatasetManifest m;
    try {
        m.n_views = j.at("n_views").get<int>();
        m.n_frames = j.at("n_frames").get<int>();
        m.seed = j.at("seed").get<uint64_t>();
        m.blob_count = j.at("blob_count").get<int>();
        m.reference = j.at("reference").get<std::string>();
        for (const auto& e : j.at("frames")) {
            m.frames.push_back({e.at("t").get<int>(), e.at("view").get<int>(),
                                e.at("path").get<std::string>(),
                                e.at("camera").get<std::string>()});
        }
        const auto& r = j.at("render");
        m.width = r.at("width").get<int>();
        m.height = r.at("height").get<int>();
        m.samples_per_ray = r.at("samples_per_ray").get<int>();
        m.t_near = r.at("t_near").get<double>();
        m.t_far = r.at("t_far").get<double>();
        const auto& bg = r.at("background");
        m.background = {bg.at(0).get<float>(), bg.at(1).get<float>(), bg.at(2).get<float>()};
        const auto& rig = j.at("rig");
        m.rig_radius = rig.at("radius").get<double>();
        m.rig_spread_deg = rig.at("spread_deg").get<double>();
        m.rig_focal = rig.at("focal").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw format_error(path.string() + ": " + e.what());
    }
    if (m.n_views < 1 || m.n_frames < 1 ||
        m.frames.size() != size_t(m.n_views) * size_t(m.n_frames))
        throw format_error(path.string() + ": frame list does not match n_views * n_frames");
    return m;
}

CameraRig rig_from_manifest(const DatasetManifest& m) {
    return make_rig(m.n_views, m.rig_radius, m.rig_spread_deg, m.rig_focal);
}

RenderConfig render_config_from_manifest(const DatasetManifest& m) {
    RenderConfig cfg;
    cfg.width = m.width;
    cfg.height = m.height;
    cfg.samples_per_ray = m.samples_per_ray;
    cfg.t_near = m.t_near;
    cfg.t_far = m.t_far;
    cfg.background = m.background;
    return cfg;
}

}  // namespace trifuse
