// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "trifuse/image.hpp"
#include "trifuse/render.hpp"

namespace trifuse {

// Pluggable full-reference image comparison.
class ImageMetric {
  public:
    virtual ~ImageMetric() = default;
    virtual std::string name() const = 0;
    virtual bool higher_better() const = 0;
    virtual double evaluate(const ImageF& a, const ImageF& b) const = 0;
};

// 10*log10(1/MSE) over all channels; identical images return the 99.0 cap.
inline constexpr double kPsnrCap = 99.0;
double psnr(const ImageF& a, const ImageF& b);

// Mean absolute pixel difference (lower is better).
double l1_metric(const ImageF& a, const ImageF& b);

class PsnrMetric final : public ImageMetric {
  public:
    std::string name() const override { return "psnr"; }
    bool higher_better() const override { return true; }
    double evaluate(const ImageF& a, const ImageF& b) const override { return psnr(a, b); }
};

class L1Metric final : public ImageMetric {
  public:
    std::string name() const override { return "l1"; }
    bool higher_better() const override { return false; }
    double evaluate(const ImageF& a, const ImageF& b) const override { return l1_metric(a, b); }
};

// Shells out to an external scorer: argv = (rendered path, gt path), stdout =
// one decimal score, exit 0. Images are written as PNGs under tmp_dir with
// unique names, so concurrent evaluation is safe.
class SubprocessMetric final : public ImageMetric {
  public:
    SubprocessMetric(std::string command, std::filesystem::path tmp_dir,
                     bool higher_better = true);

    std::string name() const override { return "external:" + command_; }
    bool higher_better() const override { return higher_better_; }
    double evaluate(const ImageF& a, const ImageF& b) const override;

  private:
    std::string command_;
    std::filesystem::path tmp_dir_;
    bool higher_better_;
    mutable std::atomic<uint64_t> counter_{0};
};

// Parses "psnr", "l1", or "external:<command>".
std::unique_ptr<ImageMetric> make_metric(const std::string& spec,
                                         const std::filesystem::path& tmp_dir);

// T x N x N score tensor: frame t, input (reconstruction) view i, evaluation
// (rendering) view j. Entries can be missing (failed reconstructions) and are
// then excluded from every aggregate.
struct ScoreTensor {
    int frames = 0;
    int views = 0;
    std::string metric_name;
    std::vector<double> scores;
    std::vector<uint8_t> present;

    ScoreTensor() = default;
    ScoreTensor(int frames_, int views_, std::string metric);

    size_t index(int t, int i, int j) const {
        return (size_t(t) * views + i) * views + j;
    }
    double score(int t, int i, int j) const { return scores[index(t, i, j)]; }
    bool has(int t, int i, int j) const { return present[index(t, i, j)] != 0; }
    void set(int t, int i, int j, double value) {
        scores[index(t, i, j)] = value;
        present[index(t, i, j)] = 1;
    }
    int missing_count() const;
};

// Builds a scene for (input view, frame). Reconstructors that cannot run
// concurrently clear parallel_safe to force the serial path.
struct Reconstructor {
    std::function<std::shared_ptr<const Field>(int input_view, int frame)> build;
    bool parallel_safe = true;
};

// Fills S[t,i,j] = metric(render from camera j of the scene reconstructed
// from view i, gt_frames[t*N + j]). Renders are quantized to 8-bit levels
// before scoring so they compare exactly against ground truth loaded from
// 8-bit files. gt_frames holds T*N RGB rasters, frame-major. A reconstructor
// failure for (i, t) leaves that row of entries missing. cfg.threads > 1
// distributes (t, i) pairs across a pool; rendering inside workers is
// single-threaded, and results are identical for every thread count.
ScoreTensor build_score_tensor(const Reconstructor& rec, const std::vector<Camera>& cameras,
                               const std::vector<ImageF>& gt_frames, const ImageMetric& metric,
                               const RenderConfig& cfg);

// Mean over all present entries.
double overall_quality(const ScoreTensor& s);

// Mean over present entries with i != j.
double nvs_quality(const ScoreTensor& s);

// Mean over (t, i) of the stddev of {S[t,i,j] : j != i, present}; the divisor
// is the number of entries in each set (N - 1 when nothing is missing).
double novel_view_variation(const ScoreTensor& s);

// Mean over (t, j) of the stddev of {S[t,i,j] : i != j, present}; equals
// novel_view_variation of the view-transposed tensor.
double input_view_variation(const ScoreTensor& s);

// Swaps the input and evaluation view axes.
ScoreTensor transpose_views(const ScoreTensor& s);

struct EvalReport {
    double overall = 0;
    double nvs = 0;
    double nvv = 0;
    double ivv = 0;
    int missing = 0;
};

EvalReport evaluate_scores(const ScoreTensor& s);

// Long-form CSV with header "t,i,j,score" (present entries only) plus a
// headerless N x N grid of per-cell time means.
void export_scores(const ScoreTensor& s, const std::filesystem::path& csv_path,
                   const std::filesystem::path& mean_csv_path);

// Time-averaged N x N matrix as a PNG, colorized min -> max with a fixed
// perceptual colormap; each cell becomes a cell_size x cell_size block.
void render_heatmap(const ScoreTensor& s, const std::filesystem::path& png_path,
                    int cell_size = 32);

}  // namespace trifuse
