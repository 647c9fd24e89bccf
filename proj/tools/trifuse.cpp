// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: dataset synthesis, rendering, shoulder-warped
// rendering, visibility computation, triplane warping/fusion, loss reports,
// and the multi-view evaluation protocol. Errors print one machine-parsable
// JSON line to stderr; exit codes are 2 (usage), 3 (data), 4 (numerics).

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trifuse/augment.hpp"
#include "trifuse/camera.hpp"
#include "trifuse/error.hpp"
#include "trifuse/eval.hpp"
#include "trifuse/field.hpp"
#include "trifuse/fusion.hpp"
#include "trifuse/image.hpp"
#include "trifuse/mlp.hpp"
#include "trifuse/render.hpp"
#include "trifuse/rng.hpp"
#include "trifuse/scene.hpp"
#include "trifuse/triplane.hpp"
#include "trifuse/visibility.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trifuse;

namespace {

// ---------------------------------------------------------------------------
// Config file: a strict JSON schema supplying defaults that command-line
// flags override.

const std::map<std::string, std::vector<std::string>> kConfigSchema = {
    {"render", {"width", "height", "samples_per_ray", "t_near", "t_far", "background"}},
    {"rig", {"views", "radius", "spread_deg", "focal"}},
    {"scene", {"seed", "blobs", "frames"}},
    {"weights", {"undist", "vis", "fusion", "render"}},
    {"", {"render", "rig", "scene", "weights", "metric", "reconstructor", "threads", "out",
          "seed"}}};

class config_file {
  public:
    void load(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open config: " + path.string());
        try {
            in >> data_;
        } catch (const json::parse_error& e) {
            throw format_error(path.string() + ": " + e.what());
        }
        if (!data_.is_object()) throw parameter_error(path.string() + ": config must be an object");
        check_keys(data_, "", path);
        for (const auto& [section, keys] : kConfigSchema) {
            if (section.empty() || !data_.contains(section)) continue;
            if (!data_[section].is_object())
                throw parameter_error(path.string() + ": \"" + section + "\" must be an object");
            check_keys(data_[section], section, path);
        }
        loaded_ = true;
    }

    template <typename T>
    void apply(const std::string& section, const std::string& key, T& value) const {
        if (!loaded_) return;
        const json* node = &data_;
        if (!section.empty()) {
            if (!data_.contains(section)) return;
            node = &data_[section];
        }
        if (!node->contains(key)) return;
        try {
            value = node->at(key).get<T>();
        } catch (const json::exception& e) {
            throw parameter_error("config key \"" + section + (section.empty() ? "" : ".") + key +
                                  "\": " + e.what());
        }
    }

    void apply_background(vec3f& bg) const {
        std::vector<double> v;
        apply("render", "background", v);
        if (v.empty()) return;
        if (v.size() != 3) throw parameter_error("config render.background needs 3 numbers");
        bg = {float(v[0]), float(v[1]), float(v[2])};
    }

  private:
    static void check_keys(const json& node, const std::string& section, const fs::path& path) {
        const auto& allowed = kConfigSchema.at(section);
        for (const auto& [key, value] : node.items())
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                throw parameter_error(path.string() + ": unknown config key \"" +
                                      (section.empty() ? key : section + "." + key) + "\"");
    }

    json data_;
    bool loaded_ = false;
};

// ---------------------------------------------------------------------------
// Shared option bundles.

struct render_opts {
    int width = 128;
    int height = 128;
    int samples = 64;
    double t_near = 0.1;
    double t_far = 2.6;
    std::vector<double> background = {1.0, 1.0, 1.0};
    int threads = 1;
    bool jitter = false;
    uint64_t jitter_seed = 0;

    RenderConfig to_config() const {
        RenderConfig cfg;
        cfg.width = width;
        cfg.height = height;
        cfg.samples_per_ray = samples;
        cfg.t_near = t_near;
        cfg.t_far = t_far;
        if (background.size() != 3) throw parameter_error("--background needs 3 numbers");
        cfg.background = {float(background[0]), float(background[1]), float(background[2])};
        cfg.threads = threads;
        cfg.jitter = jitter;
        cfg.jitter_seed = jitter_seed;
        return cfg;
    }
};

void add_render_flags(CLI::App* cmd, render_opts& opts, const config_file& config) {
    config.apply("render", "width", opts.width);
    config.apply("render", "height", opts.height);
    config.apply("render", "samples_per_ray", opts.samples);
    config.apply("render", "t_near", opts.t_near);
    config.apply("render", "t_far", opts.t_far);
    {
        vec3f bg = {float(opts.background[0]), float(opts.background[1]),
                    float(opts.background[2])};
        config.apply_background(bg);
        opts.background = {bg.x, bg.y, bg.z};
    }
    config.apply("", "threads", opts.threads);
    cmd->add_option("--width", opts.width, "Image width in pixels");
    cmd->add_option("--height", opts.height, "Image height in pixels");
    cmd->add_option("--samples", opts.samples, "Quadrature samples per ray");
    cmd->add_option("--tnear", opts.t_near, "Near marching distance");
    cmd->add_option("--tfar", opts.t_far, "Far marching distance");
    cmd->add_option("--background", opts.background, "Background color r g b")->expected(3);
    cmd->add_option("--threads", opts.threads, "Worker thread count");
    cmd->add_flag("--jitter", opts.jitter, "Stratified jitter instead of midpoints");
    cmd->add_option("--jitter-seed", opts.jitter_seed, "Seed for --jitter");
}

// A renderable source: either a triplane file (+ optional decoder weights)
// or a procedural blob scene.
struct field_opts {
    std::string triplane_path;
    std::string mlp_path;
    uint64_t scene_seed = 7;
    int blobs = 5;
    int frame = 0;
    int frames = 1;
    bool use_scene = false;
};

void add_field_flags(CLI::App* cmd, field_opts& opts, const config_file& config) {
    config.apply("scene", "seed", opts.scene_seed);
    config.apply("scene", "blobs", opts.blobs);
    cmd->add_option("--triplane", opts.triplane_path, "Triplane file to render");
    cmd->add_option("--mlp", opts.mlp_path, "Decoder weights file (default: seeded weights)");
    cmd->add_flag("--scene", opts.use_scene, "Render a procedural blob scene instead");
    cmd->add_option("--scene-seed", opts.scene_seed, "Blob scene seed");
    cmd->add_option("--blobs", opts.blobs, "Blob count for --scene");
    cmd->add_option("--frame", opts.frame, "Scene frame index");
    cmd->add_option("--frames", opts.frames, "Scene frame count");
}

std::shared_ptr<const Field> load_field(const field_opts& opts) {
    if (!opts.triplane_path.empty()) {
        Triplane tp = read_triplane(opts.triplane_path);
        MlpWeights weights = opts.mlp_path.empty() ? default_mlp_weights(0, tp.channels())
                                                   : read_mlp(opts.mlp_path);
        return std::make_shared<TriplaneField>(std::move(tp), std::move(weights));
    }
    if (opts.use_scene) {
        DynamicScene scene = make_scene(opts.scene_seed, opts.blobs,
                                        std::max(opts.frames, opts.frame + 1));
        return std::make_shared<AnalyticBlobField>(scene.frame_field(opts.frame));
    }
    throw parameter_error("give either --triplane FILE or --scene");
}

struct camera_opts {
    std::string camera_path;
    double yaw_deg = 0;
    double radius = 2.7;
    double focal = kDefaultFocal;
};

void add_camera_flags(CLI::App* cmd, camera_opts& opts, const config_file& config) {
    config.apply("rig", "radius", opts.radius);
    config.apply("rig", "focal", opts.focal);
    cmd->add_option("--camera", opts.camera_path, "Camera JSON file");
    cmd->add_option("--yaw", opts.yaw_deg, "Arc camera yaw in degrees (if no --camera)");
    cmd->add_option("--radius", opts.radius, "Arc camera distance from the origin");
    cmd->add_option("--focal", opts.focal, "Normalized focal length");
}

Camera load_camera(const camera_opts& opts) {
    if (!opts.camera_path.empty()) return read_camera(opts.camera_path);
    double yaw = radians(opts.yaw_deg);
    vec3d eye{opts.radius * std::sin(yaw), 0.0, opts.radius * std::cos(yaw)};
    return look_at_camera(eye, {0, 0, 0}, {0, 1, 0}, opts.focal);
}

void ensure_parent_dir(const fs::path& path) {
    fs::path parent = path.parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_render_outputs(const RenderedImage& img, const std::string& prefix, json& report) {
    fs::path rgb_path = prefix + ".png";
    ensure_parent_dir(rgb_path);
    write_rgb8(img.rgb, rgb_path);
    write_imagef(img.feature, prefix + "_feature.imgf");
    write_imagef(encode_depth(img.depth), prefix + "_depth.imgf");
    write_imagef(img.alpha, prefix + "_alpha.imgf");
    report["outputs"] = {rgb_path.string(), prefix + "_feature.imgf", prefix + "_depth.imgf",
                         prefix + "_alpha.imgf"};
}

// ---------------------------------------------------------------------------
// Reconstructors for the evaluation protocol.

Reconstructor make_reconstructor(const std::string& spec, const DatasetManifest& manifest,
                                 const CameraRig& rig, const fs::path& manifest_dir,
                                 const fs::path& work_dir, const std::string& mlp_path) {
    Reconstructor rec;
    if (spec == "identity") {
        auto scene = std::make_shared<DynamicScene>(
            make_scene(manifest.seed, manifest.blob_count, manifest.n_frames));
        rec.build = [scene](int, int t) -> std::shared_ptr<const Field> {
            return std::make_shared<AnalyticBlobField>(scene->frame_field(t));
        };
        return rec;
    }
    if (spec.rfind("perturb:", 0) == 0) {
        double sigma = 0;
        try {
            sigma = std::stod(spec.substr(8));
        } catch (const std::exception&) {
            throw parameter_error("bad perturb magnitude in \"" + spec + "\"");
        }
        if (!(sigma >= 0) || !std::isfinite(sigma))
            throw parameter_error("perturb magnitude must be finite and >= 0");
        auto scene = std::make_shared<DynamicScene>(
            make_scene(manifest.seed, manifest.blob_count, manifest.n_frames));
        double spread = manifest.rig_spread_deg;
        uint64_t seed = manifest.seed;
        int frames = manifest.n_frames;
        auto yaws = rig.yaws_deg;
        auto cameras = rig.cameras;
        // Shift every blob along the input camera's viewing axis; the shift
        // grows with how oblique that view is, plus a seeded jitter, so
        // reconstructions from side views degrade more.
        rec.build = [=](int view, int t) -> std::shared_ptr<const Field> {
            std::vector<blob> blobs = scene->frame_field(t).blobs();
            vec3d axis = normalize(cameras[size_t(view)].extrinsic.translation());
            rng64 rng(mix_seed(seed ^ 0x7e57ab1eu, uint64_t(view) * frames + t));
            double shift = sigma * (std::abs(yaws[size_t(view)]) / spread) +
                           0.2 * sigma * rng.uniform();
            vec3f offset = to_float(shift * axis);
            for (blob& b : blobs) b.center = b.center + offset;
            return std::make_shared<AnalyticBlobField>(std::move(blobs));
        };
        return rec;
    }
    if (spec.rfind("external:", 0) == 0) {
        std::string command = spec.substr(9);
        if (command.empty()) throw parameter_error("external reconstructor command is empty");
        fs::create_directories(work_dir);
        // Lay out input image paths by (t, view) for the subprocess contract:
        // argv = (input image, output triplane), exit 0 on success.
        std::vector<std::string> inputs(size_t(manifest.n_frames) * manifest.n_views);
        for (const auto& e : manifest.frames)
            inputs[size_t(e.t) * manifest.n_views + e.view] = (manifest_dir / e.path).string();
        int n_views = manifest.n_views;
        rec.build = [=](int view, int t) -> std::shared_ptr<const Field> {
            fs::path out = work_dir / ("rec_v" + std::to_string(view) + "_f" +
                                       std::to_string(t) + ".trpl");
            std::string cmd = command + " '" + inputs[size_t(t) * n_views + view] + "' '" +
                              out.string() + "'";
            int status = std::system(cmd.c_str());
            if (status != 0)
                throw io_error("external reconstructor exited with status " +
                               std::to_string(status));
            Triplane tp = read_triplane(out);
            MlpWeights weights =
                mlp_path.empty() ? default_mlp_weights(0, tp.channels()) : read_mlp(mlp_path);
            return std::make_shared<TriplaneField>(std::move(tp), std::move(weights));
        };
        return rec;
    }
    throw parameter_error("unknown reconstructor \"" + spec +
                          "\" (use identity, perturb:<sigma>, or external:<command>)");
}

// ---------------------------------------------------------------------------
// Commands.

void cmd_synth(CLI::App* cmd, const config_file& config) {
    auto opts = std::make_shared<render_opts>();
    // Dataset rendering must cover the camera arc, so the marching range
    // defaults wider than the plain-render default.
    opts->t_near = 1.8;
    opts->t_far = 3.6;
    auto out_dir = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    auto views = std::make_shared<int>(8);
    auto frames = std::make_shared<int>(3);
    auto blobs = std::make_shared<int>(5);
    auto radius = std::make_shared<double>(2.7);
    auto spread = std::make_shared<double>(70.0);
    auto focal = std::make_shared<double>(kDefaultFocal);

    config.apply("", "out", *out_dir);
    config.apply("", "seed", *seed);
    config.apply("scene", "seed", *seed);
    config.apply("scene", "blobs", *blobs);
    config.apply("scene", "frames", *frames);
    config.apply("rig", "views", *views);
    config.apply("rig", "radius", *radius);
    config.apply("rig", "spread_deg", *spread);
    config.apply("rig", "focal", *focal);

    add_render_flags(cmd, *opts, config);
    cmd->add_option("--out", *out_dir, "Output directory")->required(false);
    cmd->add_option("--seed", *seed, "Scene seed");
    cmd->add_option("--views", *views, "Camera count");
    cmd->add_option("--frames", *frames, "Frame count");
    cmd->add_option("--blobs", *blobs, "Blob count");
    cmd->add_option("--radius", *radius, "Camera arc radius");
    cmd->add_option("--spread", *spread, "Camera yaw spread in degrees");
    cmd->add_option("--focal", *focal, "Normalized focal length");

    cmd->callback([=] {
        if (out_dir->empty()) throw parameter_error("synth needs --out DIR");
        CameraRig rig = make_rig(*views, *radius, *spread, *focal);
        DynamicScene scene = make_scene(*seed, *blobs, *frames);
        DatasetManifest manifest = generate_dataset(scene, rig, opts->to_config(), *out_dir);
        json report = {{"manifest", (fs::path(*out_dir) / "manifest.json").string()},
                       {"images", manifest.frames.size()},
                       {"views", manifest.n_views},
                       {"frames", manifest.n_frames}};
        std::cout << report.dump() << "\n";
    });
}

void cmd_render(CLI::App* cmd, const config_file& config) {
    auto fopts = std::make_shared<field_opts>();
    auto copts = std::make_shared<camera_opts>();
    auto ropts = std::make_shared<render_opts>();
    auto prefix = std::make_shared<std::string>();
    add_field_flags(cmd, *fopts, config);
    add_camera_flags(cmd, *copts, config);
    add_render_flags(cmd, *ropts, config);
    cmd->add_option("--out-prefix", *prefix, "Output path prefix")->required();

    cmd->callback([=] {
        auto field = load_field(*fopts);
        Camera cam = load_camera(*copts);
        RenderedImage img = render(*field, cam, ropts->to_config());
        json report;
        write_render_outputs(img, *prefix, report);
        std::cout << report.dump() << "\n";
    });
}

void cmd_shoulder(CLI::App* cmd, const config_file& config) {
    auto fopts = std::make_shared<field_opts>();
    auto copts = std::make_shared<camera_opts>();
    auto ropts = std::make_shared<render_opts>();
    auto prefix = std::make_shared<std::string>();
    auto warp = std::make_shared<ShoulderWarp>();
    auto roll_deg = std::make_shared<double>(0);
    auto yaw_deg = std::make_shared<double>(0);
    add_field_flags(cmd, *fopts, config);
    add_camera_flags(cmd, *copts, config);
    add_render_flags(cmd, *ropts, config);
    cmd->add_option("--out-prefix", *prefix, "Output path prefix")->required();
    cmd->add_option("--roll-deg", *roll_deg, "Roll at the shoulder base, degrees");
    cmd->add_option("--yaw-base-deg", *yaw_deg, "Yaw at the shoulder base, degrees");
    cmd->add_option("--chin-y", warp->y_chin, "Chin line height");
    cmd->add_option("--base-y", warp->y_base, "Shoulder base height");
    cmd->add_flag("--orthonormal-yaw", warp->orthonormal_yaw,
                  "Use the orthonormal yaw matrix variant");

    cmd->callback([=] {
        warp->theta_base = radians(*roll_deg);
        warp->phi_base = radians(*yaw_deg);
        auto field = load_field(*fopts);
        Camera cam = load_camera(*copts);
        RenderedImage img = render_with_shoulder(*field, cam, ropts->to_config(), *warp);
        json report;
        write_render_outputs(img, *prefix, report);
        std::cout << report.dump() << "\n";
    });
}

void cmd_visibility(CLI::App* cmd, const config_file& config) {
    auto fopts = std::make_shared<field_opts>();
    auto copts = std::make_shared<camera_opts>();
    auto ropts = std::make_shared<render_opts>();
    auto out = std::make_shared<std::string>();
    auto resolution = std::make_shared<int>(256);
    auto dilation = std::make_shared<int>(1);
    add_field_flags(cmd, *fopts, config);
    add_camera_flags(cmd, *copts, config);
    add_render_flags(cmd, *ropts, config);
    cmd->add_option("--out", *out, "Output mask file")->required();
    cmd->add_option("--resolution", *resolution, "Mask resolution");
    cmd->add_option("--dilation", *dilation, "Dilation radius in texels");

    cmd->callback([=] {
        auto field = load_field(*fopts);
        Camera cam = load_camera(*copts);
        VisibilityTriplane vis =
            visibility_for(*field, cam, *resolution, ropts->to_config(), *dilation);
        ensure_parent_dir(*out);
        write_mask_triplane(vis, *out);
        size_t set_texels = 0;
        for (const auto& plane : vis.planes)
            for (float v : plane) set_texels += v != 0;
        json report = {{"out", *out}, {"set_texels", set_texels}};
        std::cout << report.dump() << "\n";
    });
}

void cmd_warp(CLI::App* cmd, const config_file&) {
    auto triplane_path = std::make_shared<std::string>();
    auto flow_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto flow_seed = std::make_shared<uint64_t>(0);
    auto flow_magnitude = std::make_shared<double>(1.5);
    auto use_procedural = std::make_shared<bool>(false);
    cmd->add_option("--triplane", *triplane_path, "Input triplane")->required();
    cmd->add_option("--flow", *flow_path, "Displacement field file");
    cmd->add_flag("--flow-procedural", *use_procedural, "Generate a seeded smooth flow");
    cmd->add_option("--flow-seed", *flow_seed, "Seed for --flow-procedural");
    cmd->add_option("--flow-magnitude", *flow_magnitude,
                    "Texel magnitude for --flow-procedural");
    cmd->add_option("--out", *out, "Output triplane")->required();

    cmd->callback([=] {
        Triplane tp = read_triplane(*triplane_path);
        FlowField flow;
        if (!flow_path->empty())
            flow = read_flow(*flow_path);
        else if (*use_procedural)
            flow = procedural_flow(*flow_seed, tp.resolution(), float(*flow_magnitude));
        else
            throw parameter_error("give either --flow FILE or --flow-procedural");
        Triplane warped = warp_triplane(tp, flow);
        ensure_parent_dir(*out);
        write_triplane(warped, *out);
        json report = {{"out", *out}};
        std::cout << report.dump() << "\n";
    });
}

void cmd_fuse(CLI::App* cmd, const config_file&) {
    auto undist = std::make_shared<std::string>();
    auto prior = std::make_shared<std::string>();
    auto vis_undist = std::make_shared<std::string>();
    auto vis_prior = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto smooth = std::make_shared<int>(0);
    cmd->add_option("--undist", *undist, "Undistorted input triplane")->required();
    cmd->add_option("--prior", *prior, "Prior triplane")->required();
    cmd->add_option("--vis-undist", *vis_undist, "Input-view visibility mask")->required();
    cmd->add_option("--vis-prior", *vis_prior, "Prior-view visibility mask")->required();
    cmd->add_option("--smooth-radius", *smooth, "Visibility smoothing radius");
    cmd->add_option("--out", *out, "Output triplane")->required();

    cmd->callback([=] {
        Triplane fused =
            fuse_triplanes(read_triplane(*undist), read_triplane(*prior),
                           read_mask_triplane(*vis_undist), read_mask_triplane(*vis_prior),
                           *smooth);
        ensure_parent_dir(*out);
        write_triplane(fused, *out);
        json report = {{"out", *out}};
        std::cout << report.dump() << "\n";
    });
}

void cmd_losses(CLI::App* cmd, const config_file& config) {
    auto undist = std::make_shared<std::string>();
    auto fused = std::make_shared<std::string>();
    auto gt = std::make_shared<std::string>();
    auto vis_raw = std::make_shared<std::string>();
    auto vis_raw_gt = std::make_shared<std::string>();
    auto vis_prior = std::make_shared<std::string>();
    auto vis_prior_gt = std::make_shared<std::string>();
    auto occ = std::make_shared<std::string>();
    auto weights = std::make_shared<LossWeights>();
    auto render_value = std::make_shared<double>(0);

    config.apply("weights", "undist", weights->undist);
    config.apply("weights", "vis", weights->vis);
    config.apply("weights", "fusion", weights->fusion);
    config.apply("weights", "render", weights->render);

    cmd->add_option("--undist", *undist, "Undistorted triplane")->required();
    cmd->add_option("--fused", *fused, "Fused triplane")->required();
    cmd->add_option("--gt", *gt, "Ground-truth triplane")->required();
    cmd->add_option("--vis-raw", *vis_raw, "Input-view visibility")->required();
    cmd->add_option("--vis-raw-gt", *vis_raw_gt, "Input-view visibility target")->required();
    cmd->add_option("--vis-prior", *vis_prior, "Prior-view visibility")->required();
    cmd->add_option("--vis-prior-gt", *vis_prior_gt, "Prior-view visibility target")->required();
    cmd->add_option("--occ", *occ, "Occlusion mask")->required();
    cmd->add_option("--w-undist", weights->undist, "Undistortion loss weight");
    cmd->add_option("--w-vis", weights->vis, "Visibility loss weight");
    cmd->add_option("--w-fusion", weights->fusion, "Fusion loss weight");
    cmd->add_option("--w-render", weights->render, "Render loss weight");
    cmd->add_option("--render-value", *render_value, "Render metric value for the total");

    cmd->callback([=] {
        Triplane t_undist = read_triplane(*undist);
        Triplane t_fused = read_triplane(*fused);
        Triplane t_gt = read_triplane(*gt);
        VisibilityTriplane m_raw = read_mask_triplane(*vis_raw);
        VisibilityTriplane m_raw_gt = read_mask_triplane(*vis_raw_gt);
        VisibilityTriplane m_prior = read_mask_triplane(*vis_prior);
        VisibilityTriplane m_prior_gt = read_mask_triplane(*vis_prior_gt);
        OcclusionMask m_occ = read_mask_triplane(*occ);

        double l_undist = loss_undist(t_undist, t_gt);
        double l_vis = loss_vis(m_raw, m_raw_gt, m_prior, m_prior_gt);
        double l_fusion = loss_fusion(t_fused, t_gt, m_raw_gt, m_occ);
        double total = loss_total(l_undist, l_vis, l_fusion, *render_value, *weights);
        json report = {{"undist", l_undist},
                       {"vis", l_vis},
                       {"fusion", l_fusion},
                       {"render", *render_value},
                       {"total", total}};
        std::cout << report.dump() << "\n";
    });
}

void cmd_eval(CLI::App* cmd, const config_file& config) {
    auto manifest_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    auto reconstructor = std::make_shared<std::string>("identity");
    auto metric_spec = std::make_shared<std::string>("psnr");
    auto mlp_path = std::make_shared<std::string>();
    auto threads = std::make_shared<int>(1);

    config.apply("", "reconstructor", *reconstructor);
    config.apply("", "metric", *metric_spec);
    config.apply("", "threads", *threads);
    config.apply("", "out", *out_dir);

    cmd->add_option("--manifest", *manifest_path, "Dataset manifest")->required();
    cmd->add_option("--out", *out_dir, "Report output directory");
    cmd->add_option("--reconstructor", *reconstructor,
                    "identity | perturb:<sigma> | external:<command>");
    cmd->add_option("--metric", *metric_spec, "psnr | l1 | external:<command>");
    cmd->add_option("--mlp", *mlp_path, "Decoder weights for external reconstructions");
    cmd->add_option("--threads", *threads, "Worker thread count");

    cmd->callback([=] {
        if (out_dir->empty()) throw parameter_error("eval needs --out DIR");
        fs::path manifest_dir = fs::path(*manifest_path).parent_path();
        DatasetManifest manifest = read_manifest(*manifest_path);
        CameraRig rig = rig_from_manifest(manifest);
        RenderConfig cfg = render_config_from_manifest(manifest);
        cfg.threads = *threads;

        std::vector<ImageF> gt(size_t(manifest.n_frames) * manifest.n_views);
        for (const auto& e : manifest.frames)
            gt[size_t(e.t) * manifest.n_views + e.view] = read_rgb8(manifest_dir / e.path);

        fs::create_directories(*out_dir);
        auto metric = make_metric(*metric_spec, fs::path(*out_dir) / "tmp");
        Reconstructor rec = make_reconstructor(*reconstructor, manifest, rig, manifest_dir,
                                               fs::path(*out_dir) / "tmp", *mlp_path);

        ScoreTensor tensor = build_score_tensor(rec, rig.cameras, gt, *metric, cfg);
        EvalReport report = evaluate_scores(tensor);
        export_scores(tensor, fs::path(*out_dir) / "scores.csv",
                      fs::path(*out_dir) / "scores_mean.csv");
        render_heatmap(tensor, fs::path(*out_dir) / "heatmap.png");

        json j = {{"overall", report.overall}, {"nvs", report.nvs},     {"nvv", report.nvv},
                  {"ivv", report.ivv},         {"missing", report.missing},
                  {"metric", tensor.metric_name}};
        {
            std::ofstream out(fs::path(*out_dir) / "report.json");
            if (!out) throw io_error("cannot write report.json");
            out << j.dump(2) << "\n";
        }
        std::cout << j.dump() << "\n";
    });
}

int error_exit(const std::string& command, const char* kind, const std::string& message) {
    json diag = {{"command", command}, {"error", kind}, {"message", message}};
    std::cerr << diag.dump() << std::endl;
    if (std::string(kind) == "parameter" || std::string(kind) == "usage") return 2;
    if (std::string(kind) == "numerical") return 4;
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    // The config file provides defaults, so it must load before options bind.
    std::string config_path;
    for (int i = 1; i < argc; i++) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc)
            config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0)
            config_path = arg.substr(9);
    }

    CLI::App app{"Triplane rendering, fusion, and multi-view evaluation engine"};
    app.require_subcommand(1);

    config_file config;
    std::string active;
    try {
        if (!config_path.empty()) config.load(config_path);

        struct command {
            const char* name;
            const char* help;
            void (*add)(CLI::App*, const config_file&);
        };
        const command commands[] = {
            {"synth", "Generate a multi-view ground-truth dataset", cmd_synth},
            {"render", "Render a triplane or blob scene to images", cmd_render},
            {"shoulder", "Render with the shoulder-pose warp", cmd_shoulder},
            {"visibility", "Compute a visibility mask triplane", cmd_visibility},
            {"warp", "Apply a displacement field to a triplane", cmd_warp},
            {"fuse", "Visibility-weighted fusion of two triplanes", cmd_fuse},
            {"losses", "Report the training loss values as JSON", cmd_losses},
            {"eval", "Run the multi-view evaluation protocol", cmd_eval},
        };
        for (const command& c : commands) {
            CLI::App* sub = app.add_subcommand(c.name, c.help);
            std::string name = c.name;
            sub->preparse_callback([&active, name](size_t) { active = name; });
            sub->add_option("--config", "JSON config file with defaults");
            c.add(sub, config);
        }

        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        return error_exit(active, "usage", e.what());
    } catch (const parameter_error& e) {
        return error_exit(active, "parameter", e.what());
    } catch (const format_error& e) {
        return error_exit(active, "format", e.what());
    } catch (const structural_error& e) {
        return error_exit(active, "structural", e.what());
    } catch (const io_error& e) {
        return error_exit(active, "io", e.what());
    } catch (const numerical_error& e) {
        return error_exit(active, "numerical", e.what());
    } catch (const std::exception& e) {
        return error_exit(active, "internal", e.what());
    }
}
