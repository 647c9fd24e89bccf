// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests for the command-line tool. Each case invokes the real
// binary (path in the TRIFUSE_CLI environment variable) and checks exit
// codes, the JSON diagnostics contract, and byte-level reproducibility.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "trifuse/fusion.hpp"
#include "trifuse/image.hpp"
#include "trifuse/rng.hpp"
#include "trifuse/triplane.hpp"
#include "trifuse/visibility.hpp"

using namespace trifuse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct cli_result {
    int status = -1;
    std::string out;
    std::string err;
    json out_json() const { return json::parse(out); }
    json err_json() const { return json::parse(err); }
};

std::string cli_path() {
    const char* path = std::getenv("TRIFUSE_CLI");
    REQUIRE_MESSAGE(path != nullptr, "TRIFUSE_CLI must point at the built binary");
    return path;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

cli_result run_cli(const std::string& args) {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() / "trifuse_cli_tests";
    fs::create_directories(dir);
    fs::path out_file = dir / ("stdout_" + std::to_string(counter) + ".txt");
    fs::path err_file = dir / ("stderr_" + std::to_string(counter) + ".txt");
    counter++;

    std::string command = "'" + cli_path() + "' " + args + " > '" + out_file.string() +
                          "' 2> '" + err_file.string() + "'";
    int raw = std::system(command.c_str());
    cli_result result;
    result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "trifuse_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

MaskTriplane constant_mask(int res, float value) {
    MaskTriplane m(res);
    for (int p = 0; p < 3; p++)
        for (float& v : m.planes[p]) v = value;
    return m;
}

}  // namespace

TEST_CASE("running without a subcommand is a usage error") {
    cli_result r = run_cli("");
    CHECK(r.status == 2);
    json diag = r.err_json();
    CHECK(diag.at("error") == "usage");
    CHECK(diag.contains("message"));
    CHECK(diag.contains("command"));
}

TEST_CASE("an unknown subcommand is a usage error") {
    cli_result r = run_cli("transmogrify");
    CHECK(r.status == 2);
    CHECK(r.err_json().at("error") == "usage");
}

TEST_CASE("a missing required option is reported against its command") {
    cli_result r = run_cli("fuse");
    CHECK(r.status == 2);
    json diag = r.err_json();
    CHECK(diag.at("error") == "usage");
    CHECK(diag.at("command") == "fuse");
}

TEST_CASE("a missing input file exits with the data error code") {
    cli_result r = run_cli("render --triplane /definitely/not/here.trpl --out-prefix /tmp/x");
    CHECK(r.status == 3);
    CHECK(r.err_json().at("error") == "io");
}

TEST_CASE("rendering a scene produces all four output layers") {
    fs::path dir = fresh_dir("render_layers");
    std::string prefix = (dir / "shot").string();
    cli_result r = run_cli("render --scene --scene-seed 3 --blobs 4 --width 20 --height 14 "
                           "--samples 16 --tnear 1.8 --tfar 3.6 --out-prefix " + prefix);
    REQUIRE_MESSAGE(r.status == 0, r.err);
    json report = r.out_json();
    CHECK(report.at("outputs").size() == 4);

    ImageF rgb = read_rgb8(prefix + ".png");
    CHECK(rgb.width() == 20);
    CHECK(rgb.height() == 14);
    ImageF feature = read_imagef(prefix + "_feature.imgf");
    CHECK(feature.width() == 20);
    CHECK(feature.channels() == 32);
    ImageF alpha = read_imagef(prefix + "_alpha.imgf");
    CHECK(alpha.channels() == 1);
    ImageF depth = read_imagef(prefix + "_depth.imgf");
    CHECK(depth.channels() == 1);
}

TEST_CASE("thread count never changes the rendered bytes") {
    fs::path dir = fresh_dir("render_threads");
    std::string base = "render --scene --scene-seed 11 --blobs 5 --width 33 --height 21 "
                       "--samples 24 --tnear 1.8 --tfar 3.6 ";
    for (int threads : {1, 4, 8}) {
        std::string prefix = (dir / ("t" + std::to_string(threads))).string();
        cli_result r = run_cli(base + "--threads " + std::to_string(threads) +
                               " --out-prefix " + prefix);
        REQUIRE_MESSAGE(r.status == 0, r.err);
    }
    for (const char* suffix : {".png", "_feature.imgf", "_depth.imgf", "_alpha.imgf"}) {
        std::string one = slurp(dir / ("t1" + std::string(suffix)));
        CHECK(one.size() > 0);
        CHECK(slurp(dir / ("t4" + std::string(suffix))) == one);
        CHECK(slurp(dir / ("t8" + std::string(suffix))) == one);
    }
}

TEST_CASE("a zero-angle shoulder render matches the plain render") {
    fs::path dir = fresh_dir("shoulder_identity");
    std::string common = " --scene --scene-seed 5 --blobs 4 --width 24 --height 24 "
                         "--samples 16 --tnear 1.8 --tfar 3.6 --out-prefix ";
    std::string plain = (dir / "plain").string();
    std::string warped = (dir / "warped").string();
    REQUIRE(run_cli("render" + common + plain).status == 0);
    REQUIRE(run_cli("shoulder --roll-deg 0 --yaw-base-deg 0" + common + warped).status == 0);
    CHECK(slurp(plain + ".png") == slurp(warped + ".png"));
    CHECK(slurp(plain + "_feature.imgf") == slurp(warped + "_feature.imgf"));

    // A real warp angle must change the image.
    std::string rolled = (dir / "rolled").string();
    REQUIRE(run_cli("shoulder --roll-deg 20" + common + rolled).status == 0);
    CHECK(slurp(rolled + ".png") != slurp(plain + ".png"));
}

TEST_CASE("visibility writes a loadable mask triplane") {
    fs::path dir = fresh_dir("visibility");
    fs::path mask_path = dir / "vis.mask";
    cli_result r = run_cli("visibility --scene --scene-seed 7 --blobs 3 --width 32 --height 32 "
                           "--samples 24 --tnear 1.8 --tfar 3.6 --resolution 48 --out " +
                           mask_path.string());
    REQUIRE_MESSAGE(r.status == 0, r.err);
    CHECK(r.out_json().at("set_texels").get<size_t>() > 0);
    MaskTriplane mask = read_mask_triplane(mask_path);
    CHECK(mask.resolution == 48);
}

TEST_CASE("warp and fuse round-trip triplanes through files") {
    fs::path dir = fresh_dir("warp_fuse");
    Triplane tp = procedural_triplane(31, 8, 24);
    write_triplane(tp, dir / "in.trpl");
    write_mask_triplane(constant_mask(24, 1.0f), dir / "ones.mask");

    cli_result w = run_cli("warp --triplane " + (dir / "in.trpl").string() +
                           " --flow-procedural --flow-seed 3 --out " +
                           (dir / "warped.trpl").string());
    REQUIRE_MESSAGE(w.status == 0, w.err);
    Triplane warped = read_triplane(dir / "warped.trpl");
    CHECK(warped.resolution() == 24);
    CHECK(warped.channels() == 8);

    // Rerunning the warp reproduces the output byte for byte.
    REQUIRE(run_cli("warp --triplane " + (dir / "in.trpl").string() +
                    " --flow-procedural --flow-seed 3 --out " +
                    (dir / "warped2.trpl").string()).status == 0);
    CHECK(slurp(dir / "warped.trpl") == slurp(dir / "warped2.trpl"));

    // With full input visibility the fused result is the undistorted input.
    cli_result f = run_cli("fuse --undist " + (dir / "warped.trpl").string() + " --prior " +
                           (dir / "in.trpl").string() + " --vis-undist " +
                           (dir / "ones.mask").string() + " --vis-prior " +
                           (dir / "ones.mask").string() + " --out " +
                           (dir / "fused.trpl").string());
    REQUIRE_MESSAGE(f.status == 0, f.err);
    CHECK(slurp(dir / "fused.trpl") == slurp(dir / "warped.trpl"));
}

TEST_CASE("losses on identical inputs are all zero") {
    fs::path dir = fresh_dir("losses_zero");
    Triplane tp = procedural_triplane(9, 4, 16);
    write_triplane(tp, dir / "tp.trpl");
    write_mask_triplane(constant_mask(16, 1.0f), dir / "ones.mask");
    write_mask_triplane(constant_mask(16, 0.0f), dir / "zeros.mask");

    std::string tpf = (dir / "tp.trpl").string();
    std::string ones = (dir / "ones.mask").string();
    std::string zeros = (dir / "zeros.mask").string();
    cli_result r = run_cli("losses --undist " + tpf + " --fused " + tpf + " --gt " + tpf +
                           " --vis-raw " + ones + " --vis-raw-gt " + ones + " --vis-prior " +
                           ones + " --vis-prior-gt " + ones + " --occ " + zeros);
    REQUIRE_MESSAGE(r.status == 0, r.err);
    json report = r.out_json();
    CHECK(report.at("undist").get<double>() == 0.0);
    CHECK(report.at("vis").get<double>() == 0.0);
    CHECK(report.at("fusion").get<double>() == 0.0);
    CHECK(report.at("total").get<double>() == 0.0);

    // The render term feeds through the weighted total.
    cli_result r2 = run_cli("losses --undist " + tpf + " --fused " + tpf + " --gt " + tpf +
                            " --vis-raw " + ones + " --vis-raw-gt " + ones + " --vis-prior " +
                            ones + " --vis-prior-gt " + ones + " --occ " + zeros +
                            " --render-value 0.5 --w-render 2.0");
    REQUIRE(r2.status == 0);
    CHECK(r2.out_json().at("total").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("synth then identity eval scores at the metric cap") {
    fs::path data = fresh_dir("pipeline_data");
    cli_result s = run_cli("synth --out " + data.string() +
                           " --seed 7 --views 3 --frames 2 --blobs 3 --width 24 --height 24 "
                           "--samples 16");
    REQUIRE_MESSAGE(s.status == 0, s.err);
    json synth_report = s.out_json();
    CHECK(synth_report.at("images") == 6);
    CHECK(fs::exists(data / "manifest.json"));

    fs::path out = fresh_dir("pipeline_eval");
    cli_result e = run_cli("eval --manifest " + (data / "manifest.json").string() + " --out " +
                           out.string());
    REQUIRE_MESSAGE(e.status == 0, e.err);
    json report = e.out_json();
    CHECK(report.at("overall").get<double>() == doctest::Approx(99.0).epsilon(1e-12));
    CHECK(report.at("nvv").get<double>() == 0.0);
    CHECK(report.at("ivv").get<double>() == 0.0);
    CHECK(report.at("missing") == 0);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "scores.csv"));
    CHECK(fs::exists(out / "scores_mean.csv"));
    CHECK(fs::exists(out / "heatmap.png"));

    // Reruns are byte-identical.
    fs::path out2 = fresh_dir("pipeline_eval2");
    REQUIRE(run_cli("eval --manifest " + (data / "manifest.json").string() + " --out " +
                    out2.string()).status == 0);
    for (const char* name : {"report.json", "scores.csv", "scores_mean.csv", "heatmap.png"})
        CHECK(slurp(out / name) == slurp(out2 / name));

    // A perturbed reconstructor must score below the identity cap.
    fs::path out3 = fresh_dir("pipeline_eval3");
    cli_result p = run_cli("eval --manifest " + (data / "manifest.json").string() +
                           " --reconstructor perturb:0.05 --out " + out3.string());
    REQUIRE_MESSAGE(p.status == 0, p.err);
    json perturbed = p.out_json();
    CHECK(perturbed.at("overall").get<double>() < 99.0);
    CHECK(perturbed.at("nvv").get<double>() > 0.0);
    CHECK(perturbed.at("ivv").get<double>() > 0.0);
}

TEST_CASE("config files supply defaults that flags override") {
    fs::path dir = fresh_dir("config");
    std::ofstream(dir / "cfg.json")
        << R"({"render": {"width": 20, "height": 14, "samples_per_ray": 16,
                          "t_near": 1.8, "t_far": 3.6},
               "scene": {"seed": 5}})";

    std::string from_config = (dir / "a").string();
    cli_result a = run_cli("render --scene --blobs 4 --config " + (dir / "cfg.json").string() +
                           " --out-prefix " + from_config);
    REQUIRE_MESSAGE(a.status == 0, a.err);
    CHECK(read_imagef(from_config + "_alpha.imgf").width() == 20);
    CHECK(read_imagef(from_config + "_alpha.imgf").height() == 14);

    // A flag overrides the config default for the same knob.
    std::string overridden = (dir / "b").string();
    cli_result b = run_cli("render --scene --blobs 4 --config " + (dir / "cfg.json").string() +
                           " --width 26 --out-prefix " + overridden);
    REQUIRE_MESSAGE(b.status == 0, b.err);
    CHECK(read_imagef(overridden + "_alpha.imgf").width() == 26);
    CHECK(read_imagef(overridden + "_alpha.imgf").height() == 14);

    // The config-supplied scene seed matches the explicit flag spelling.
    std::string explicit_seed = (dir / "c").string();
    cli_result c = run_cli("render --scene --blobs 4 --scene-seed 5 --width 20 --height 14 "
                           "--samples 16 --tnear 1.8 --tfar 3.6 --out-prefix " + explicit_seed);
    REQUIRE_MESSAGE(c.status == 0, c.err);
    CHECK(slurp(from_config + ".png") == slurp(explicit_seed + ".png"));
}

TEST_CASE("config validation rejects unknown keys and bad JSON") {
    fs::path dir = fresh_dir("config_bad");
    std::ofstream(dir / "typo.json") << R"({"render": {"wdith": 3}})";
    cli_result typo = run_cli("render --scene --config " + (dir / "typo.json").string() +
                              " --out-prefix " + (dir / "x").string());
    CHECK(typo.status == 2);
    CHECK(typo.err_json().at("error") == "parameter");

    std::ofstream(dir / "broken.json") << "{ not json";
    cli_result broken = run_cli("render --scene --config " + (dir / "broken.json").string() +
                                " --out-prefix " + (dir / "y").string());
    CHECK(broken.status == 3);
    CHECK(broken.err_json().at("error") == "format");

    cli_result missing = run_cli("render --scene --config " + (dir / "absent.json").string() +
                                 " --out-prefix " + (dir / "z").string());
    CHECK(missing.status == 3);
    CHECK(missing.err_json().at("error") == "io");
}
