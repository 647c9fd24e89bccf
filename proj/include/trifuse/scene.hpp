// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trifuse/camera.hpp"
#include "trifuse/field.hpp"
#include "trifuse/render.hpp"

namespace trifuse {

// Cameras on a horizontal arc looking at the origin. Yaws are evenly spaced
// on [-spread, +spread] and then ordered most-frontal first (ties broken
// toward the negative side), so cameras[0] is the frontal view.
struct CameraRig {
    std::vector<Camera> cameras;
    std::vector<double> yaws_deg;  // same order as cameras
    double radius = 0;
    double spread_deg = 0;
};

CameraRig make_rig(int n_views, double radius = 2.7, double spread_deg = 70.0,
                   double focal = kDefaultFocal);

// Time-varying blob scene: a base field plus per-blob sinusoidal center
// offsets and density modulation over frames 0..frames-1. Frame 0 is exactly
// the base field; per-frame center offsets stay below 0.08 world units, as
// does the displacement between consecutive frames.
class DynamicScene {
  public:
    DynamicScene() = default;
    DynamicScene(uint64_t seed, int blob_count, int frames);

    int frames() const { return frames_; }
    uint64_t seed() const { return seed_; }
    int blob_count() const { return int(base_.size()); }

    AnalyticBlobField frame_field(int t) const;

  private:
    struct track {
        vec3f offset_amp = {0, 0, 0};  // center offset amplitude per axis
        float density_amp = 0;         // relative density modulation amplitude
    };

    uint64_t seed_ = 0;
    int frames_ = 1;
    std::vector<blob> base_;
    std::vector<track> tracks_;
};

DynamicScene make_scene(uint64_t seed, int blob_count, int frames);

// Files written by generate_dataset, with enough parameters recorded to
// rebuild the exact scene and renders (the eval reconstructors rely on that).
struct DatasetManifest {
    int n_views = 0;
    int n_frames = 0;
    uint64_t seed = 0;
    int blob_count = 0;
    std::string reference;  // frontal render of frame 0
    struct entry {
        int t = 0;
        int view = 0;
        std::string path;    // ground-truth image
        std::string camera;  // camera JSON
    };
    std::vector<entry> frames;
    // Render/rig parameters the images were produced with.
    int width = 0, height = 0, samples_per_ray = 0;
    double t_near = 0, t_far = 0;
    vec3f background = {1, 1, 1};
    double rig_radius = 0, rig_spread_deg = 0, rig_focal = 0;
};

// Renders every (frame, view) ground-truth image plus the frontal reference,
// writes per-view camera JSONs and the manifest, and returns the manifest.
// File naming is view{j}_frame{t}.png; reruns are byte-identical.
DatasetManifest generate_dataset(const DynamicScene& scene, const CameraRig& rig,
                                 const RenderConfig& cfg,
                                 const std::filesystem::path& out_dir);

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Rebuilds the rig and render settings recorded in a manifest.
CameraRig rig_from_manifest(const DatasetManifest& m);
RenderConfig render_config_from_manifest(const DatasetManifest& m);

}  // namespace trifuse
