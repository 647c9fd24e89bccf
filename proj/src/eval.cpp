// SPDX-License-Identifier: Apache-2.0

#include "trifuse/eval.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "trifuse/error.hpp"

namespace trifuse {

namespace {

void require_same_shape(const ImageF& a, const ImageF& b, const char* who) {
    if (!a.same_shape(b))
        throw structural_error(std::string(who) + ": image shape mismatch (" +
                               std::to_string(a.channels()) + "x" + std::to_string(a.height()) +
                               "x" + std::to_string(a.width()) + " vs " +
                               std::to_string(b.channels()) + "x" + std::to_string(b.height()) +
                               "x" + std::to_string(b.width()) + ")");
    if (a.size() == 0) throw structural_error(std::string(who) + ": empty images");
}

}  // namespace

double psnr(const ImageF& a, const ImageF& b) {
    require_same_shape(a, b, "psnr");
    double acc = 0;
    auto av = a.values(), bv = b.values();
    for (size_t k = 0; k < av.size(); k++) {
        double d = double(av[k]) - double(bv[k]);
        acc += d * d;
    }
    double mse = acc / double(av.size());
    if (mse <= 0) return kPsnrCap;
    return std::min(10.0 * std::log10(1.0 / mse), kPsnrCap);
}

double l1_metric(const ImageF& a, const ImageF& b) {
    require_same_shape(a, b, "l1_metric");
    double acc = 0;
    auto av = a.values(), bv = b.values();
    for (size_t k = 0; k < av.size(); k++) acc += std::abs(double(av[k]) - double(bv[k]));
    return acc / double(av.size());
}

SubprocessMetric::SubprocessMetric(std::string command, std::filesystem::path tmp_dir,
                                   bool higher_better)
    : command_(std::move(command)), tmp_dir_(std::move(tmp_dir)), higher_better_(higher_better) {
    if (command_.empty()) throw parameter_error("external metric command is empty");
    std::filesystem::create_directories(tmp_dir_);
}

double SubprocessMetric::evaluate(const ImageF& a, const ImageF& b) const {
    uint64_t id = counter_.fetch_add(1);
    std::filesystem::path pa = tmp_dir_ / ("metric_" + std::to_string(id) + "_a.png");
    std::filesystem::path pb = tmp_dir_ / ("metric_" + std::to_string(id) + "_b.png");
    write_rgb8(a, pa);
    write_rgb8(b, pb);

    std::string cmd = command_ + " '" + pa.string() + "' '" + pb.string() + "'";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw io_error("cannot launch external metric: " + command_);
    std::string output;
    char buf[256];
    while (size_t n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
    int status = pclose(pipe);
    std::filesystem::remove(pa);
    std::filesystem::remove(pb);
    if (status != 0)
        throw io_error("external metric exited with status " + std::to_string(status) + ": " +
                       command_);
    char* end = nullptr;
    double score = std::strtod(output.c_str(), &end);
    while (end && (*end == ' ' || *end == '\n' || *end == '\r' || *end == '\t')) end++;
    if (end == output.c_str() || (end && *end != '\0') || !std::isfinite(score))
        throw format_error("external metric printed \"" + output + "\", expected one number");
    return score;
}

std::unique_ptr<ImageMetric> make_metric(const std::string& spec,
                                         const std::filesystem::path& tmp_dir) {
    if (spec == "psnr") return std::make_unique<PsnrMetric>();
    if (spec == "l1") return std::make_unique<L1Metric>();
    if (spec.rfind("external:", 0) == 0)
        return std::make_unique<SubprocessMetric>(spec.substr(9), tmp_dir);
    throw parameter_error("unknown metric \"" + spec + "\" (use psnr, l1, or external:<command>)");
}

ScoreTensor::ScoreTensor(int frames_, int views_, std::string metric)
    : frames(frames_), views(views_), metric_name(std::move(metric)) {
    if (frames < 1 || views < 1) throw parameter_error("score tensor axes must be >= 1");
    scores.assign(size_t(frames) * views * views, 0.0);
    present.assign(scores.size(), 0);
}

int ScoreTensor::missing_count() const {
    int missing = 0;
    for (uint8_t p : present) missing += p == 0;
    return missing;
}

ScoreTensor build_score_tensor(const Reconstructor& rec, const std::vector<Camera>& cameras,
                               const std::vector<ImageF>& gt_frames, const ImageMetric& metric,
                               const RenderConfig& cfg) {
    const int n = int(cameras.size());
    if (n < 2) throw parameter_error("build_score_tensor: need at least 2 views");
    if (!rec.build) throw parameter_error("build_score_tensor: reconstructor is empty");
    if (gt_frames.empty() || gt_frames.size() % size_t(n) != 0)
        throw structural_error("build_score_tensor: ground-truth count " +
                               std::to_string(gt_frames.size()) + " is not a multiple of " +
                               std::to_string(n) + " views");
    const int frames = int(gt_frames.size() / size_t(n));
    for (const ImageF& gt : gt_frames)
        if (!gt.same_shape(gt_frames.front()))
            throw structural_error("build_score_tensor: ground-truth images differ in shape");
    validate_render_config(cfg);

    ScoreTensor tensor(frames, n, metric.name());
    const int tasks = frames * n;

    // One task = one (frame, input view) pair; it renders all n evaluation
    // views. Tasks write disjoint tensor rows, so the pool is deterministic.
    auto run_task = [&](int task, const RenderConfig& inner) {
        int t = task / n;
        int i = task % n;
        std::shared_ptr<const Field> field;
        try {
            field = rec.build(i, t);
            if (!field) throw structural_error("reconstructor returned no field");
        } catch (const error&) {
            return;  // whole row stays missing
        }
        for (int j = 0; j < n; j++) {
            try {
                RenderedImage img = render(*field, cameras[j], inner);
                tensor.set(t, i, j,
                           metric.evaluate(quantize_unit(img.rgb), gt_frames[size_t(t) * n + j]));
            } catch (const error&) {
                // entry stays missing
            }
        }
    };

    int workers = rec.parallel_safe ? std::min(cfg.threads, tasks) : 1;
    if (workers <= 1) {
        for (int task = 0; task < tasks; task++) run_task(task, cfg);
    } else {
        RenderConfig inner = cfg;
        inner.threads = 1;  // parallelism lives at the task level
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; w++)
            pool.emplace_back([&] {
                try {
                    for (;;) {
                        int task = next.fetch_add(1);
                        if (task >= tasks) return;
                        run_task(task, inner);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        for (std::thread& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    return tensor;
}

double overall_quality(const ScoreTensor& s) {
    double acc = 0;
    size_t count = 0;
    for (size_t k = 0; k < s.scores.size(); k++)
        if (s.present[k]) {
            acc += s.scores[k];
            count++;
        }
    if (count == 0) throw structural_error("score tensor has no present entries");
    return acc / double(count);
}

double nvs_quality(const ScoreTensor& s) {
    if (s.views < 2) throw parameter_error("nvs_quality: need at least 2 views");
    double acc = 0;
    size_t count = 0;
    for (int t = 0; t < s.frames; t++)
        for (int i = 0; i < s.views; i++)
            for (int j = 0; j < s.views; j++)
                if (i != j && s.has(t, i, j)) {
                    acc += s.score(t, i, j);
                    count++;
                }
    if (count == 0) throw structural_error("nvs_quality: no present off-diagonal entries");
    return acc / double(count);
}

double novel_view_variation(const ScoreTensor& s) {
    if (s.views < 3)
        throw parameter_error("novel_view_variation: variance needs at least 3 views");
    double acc = 0;
    size_t slices = 0;
    for (int t = 0; t < s.frames; t++)
        for (int i = 0; i < s.views; i++) {
            double sum = 0, sum2 = 0;
            int count = 0;
            for (int j = 0; j < s.views; j++)
                if (j != i && s.has(t, i, j)) {
                    sum += s.score(t, i, j);
                    count++;
                }
            if (count == 0) continue;
            double mean = sum / count;
            for (int j = 0; j < s.views; j++)
                if (j != i && s.has(t, i, j)) {
                    double d = s.score(t, i, j) - mean;
                    sum2 += d * d;
                }
            acc += std::sqrt(sum2 / count);
            slices++;
        }
    if (slices == 0) throw structural_error("novel_view_variation: no present entries");
    return acc / double(slices);
}

ScoreTensor transpose_views(const ScoreTensor& s) {
    ScoreTensor out(s.frames, s.views, s.metric_name);
    for (int t = 0; t < s.frames; t++)
        for (int i = 0; i < s.views; i++)
            for (int j = 0; j < s.views; j++)
                if (s.has(t, i, j)) out.set(t, j, i, s.score(t, i, j));
    return out;
}

double input_view_variation(const ScoreTensor& s) {
    return novel_view_variation(transpose_views(s));
}

EvalReport evaluate_scores(const ScoreTensor& s) {
    EvalReport report;
    report.overall = overall_quality(s);
    report.nvs = nvs_quality(s);
    report.nvv = novel_view_variation(s);
    report.ivv = input_view_variation(s);
    report.missing = s.missing_count();
    return report;
}

namespace {

std::string format_score(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Per-cell mean over frames; second value false when no frame has the entry.
std::vector<std::pair<double, bool>> time_mean_matrix(const ScoreTensor& s) {
    std::vector<std::pair<double, bool>> mean(size_t(s.views) * s.views, {0.0, false});
    for (int i = 0; i < s.views; i++)
        for (int j = 0; j < s.views; j++) {
            double acc = 0;
            int count = 0;
            for (int t = 0; t < s.frames; t++)
                if (s.has(t, i, j)) {
                    acc += s.score(t, i, j);
                    count++;
                }
            if (count > 0) mean[size_t(i) * s.views + j] = {acc / count, true};
        }
    return mean;
}

// Fixed anchor colors (dark violet to yellow), linearly interpolated.
vec3f colormap(double v) {
    static constexpr float anchors[9][3] = {
        {0.267f, 0.005f, 0.329f}, {0.283f, 0.141f, 0.458f}, {0.254f, 0.265f, 0.530f},
        {0.207f, 0.372f, 0.553f}, {0.164f, 0.471f, 0.558f}, {0.128f, 0.567f, 0.551f},
        {0.135f, 0.659f, 0.518f}, {0.478f, 0.821f, 0.318f}, {0.993f, 0.906f, 0.144f}};
    double x = clamp(v, 0.0, 1.0) * 8.0;
    int k = std::min(int(x), 7);
    float f = float(x - k);
    return {anchors[k][0] + f * (anchors[k + 1][0] - anchors[k][0]),
            anchors[k][1] + f * (anchors[k + 1][1] - anchors[k][1]),
            anchors[k][2] + f * (anchors[k + 1][2] - anchors[k][2])};
}

}  // namespace

void export_scores(const ScoreTensor& s, const std::filesystem::path& csv_path,
                   const std::filesystem::path& mean_csv_path) {
    {
        std::ofstream out(csv_path);
        if (!out) throw io_error("cannot open for writing: " + csv_path.string());
        out << "t,i,j,score\n";
        for (int t = 0; t < s.frames; t++)
            for (int i = 0; i < s.views; i++)
                for (int j = 0; j < s.views; j++)
                    if (s.has(t, i, j))
                        out << t << "," << i << "," << j << ","
                            << format_score(s.score(t, i, j)) << "\n";
        if (!out) throw io_error("write failed: " + csv_path.string());
    }
    {
        std::ofstream out(mean_csv_path);
        if (!out) throw io_error("cannot open for writing: " + mean_csv_path.string());
        auto mean = time_mean_matrix(s);
        for (int i = 0; i < s.views; i++) {
            for (int j = 0; j < s.views; j++) {
                auto [value, has] = mean[size_t(i) * s.views + j];
                out << (j ? "," : "") << (has ? format_score(value) : "nan");
            }
            out << "\n";
        }
        if (!out) throw io_error("write failed: " + mean_csv_path.string());
    }
}

void render_heatmap(const ScoreTensor& s, const std::filesystem::path& png_path,
                    int cell_size) {
    if (cell_size < 1) throw parameter_error("render_heatmap: cell size must be >= 1");
    auto mean = time_mean_matrix(s);
    double lo = 0, hi = 0;
    bool any = false;
    for (auto [value, has] : mean)
        if (has) {
            lo = any ? std::min(lo, value) : value;
            hi = any ? std::max(hi, value) : value;
            any = true;
        }
    if (!any) throw structural_error("render_heatmap: no present entries");
    double span = hi - lo;

    ImageF img(3, s.views * cell_size, s.views * cell_size);
    for (int i = 0; i < s.views; i++)
        for (int j = 0; j < s.views; j++) {
            auto [value, has] = mean[size_t(i) * s.views + j];
            // Missing cells render black; present cells map min->max onto the
            // colormap (constant tensors sit mid-scale).
            vec3f color{0, 0, 0};
            if (has) color = colormap(span > 0 ? (value - lo) / span : 0.5);
            for (int y = i * cell_size; y < (i + 1) * cell_size; y++)
                for (int x = j * cell_size; x < (j + 1) * cell_size; x++) {
                    img.at(0, y, x) = color.x;
                    img.at(1, y, x) = color.y;
                    img.at(2, y, x) = color.z;
                }
        }
    write_rgb8(img, png_path);
}

}  // namespace trifuse
