#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "splat/densify.hpp"
#include "splat/optimizer.hpp"
#include "splat/scene_io.hpp"
#include "splat/simplify.hpp"

namespace splat {

enum class PipelineMode { MSv2, MSv2D, Progressive };

PipelineMode pipeline_mode_from_string(const std::string& name);
std::string to_string(PipelineMode mode);

/// All schedule constants are given at paper scale; desk_scale divides every
/// one of them (rounding up to at least 1) so the schedule keeps its shape
/// on toy scenes. stop_iter is already in scaled units.
struct TrainConfig {
    PipelineMode mode = PipelineMode::MSv2;
    uint64_t seed = 0;
    int desk_scale = 1;

    int total_iters = 18000;
    int densify_start = 500;
    int densify_interval = 250;
    int densify_end = 3000;
    int reinit_iter = 2000;
    // Aggressive pipelines keep the gradient-triggered clone/split running at
    // this cadence inside the densify window, layered under the clone events;
    // 0 disables it.
    int vanilla_interval = 100;
    std::vector<int> simplify_iters = {3000, 8000};
    std::vector<double> simplify_ratios = {0.5, 0.7};  // MSv2: sampled fraction of current N
    double simplify_keep_q = 0.9;                      // MSv2-D: prune quantile
    int cull_start = 500;
    int cull_end = 13000;
    double cull_keep_q = 0.99;
    double ident_keep_q = 0.99;
    IdentCriterion criterion = IdentCriterion::MaxWeight;

    double lambda_dssim = 0.2;
    bool stage_half_resolution = true;  // aggressive pipelines: until densify_end
    bool stage_sh_off = true;
    int opacity_reset_interval = 3000;  // progressive only; 0 disables
    float progressive_grad_threshold = 2e-4f;
    float progressive_scale_threshold = 0.01f;
    float progressive_min_opacity = 0.005f;

    int sh_degree = 3;
    int log_every = 10;
    int stop_iter = 0;        // scaled units; 0 = run to the scaled total
    bool deterministic = true;  // wall-time column written as 0 for exact reruns
    Vec3f background = Vec3f::Zero();
    RasterConfig raster;

    bool aggressive() const { return mode != PipelineMode::Progressive; }
    int scaled(int x) const { return std::max(1, x / desk_scale); }
    void validate() const;
};

/// Paper-default constants per pipeline (progressive: 30k iterations, densify
/// every 100 until 15k, opacity resets, no staging/culling/simplification).
TrainConfig default_train_config(PipelineMode mode);

struct TrainLogRow {
    int iter = 0;
    int n = 0;
    float loss = 0;
    double psnr_train = 0;  // against the active train view at its resolution
    double wall_ms = 0;
    double chamfer = -1;    // -1 when no reference points
    std::string events;     // '+'-joined tags in execution order
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    void write_csv(std::ostream& out) const;
};

struct TrainResult {
    GaussianSet set;
    TrainLog log;
};

/// Bootstraps a set from sparse points: DC color from the point color,
/// opacity 0.1, isotropic scale from the 3rd-nearest-neighbor distance,
/// identity rotation.
GaussianSet init_from_points(const std::vector<Vec3f>& points, const std::vector<Vec3f>& colors,
                             int sh_degree = 3);

/// 1.1 x the radius of the camera-center bounding sphere; scales position
/// learning rates and the progressive clone/split size threshold.
float scene_extent_of(const std::vector<Camera>& cameras);

TrainResult train(const SceneBundle& scene, const TrainConfig& config,
                  std::ostream* warnings = nullptr);

struct EvalResult {
    std::vector<double> view_psnr;
    std::vector<double> view_ssim;
    double mean_psnr = 0;
    double mean_ssim = 0;
};

/// Full-resolution, unmasked renders against the provided targets.
EvalResult evaluate(const GaussianSet& set, const std::vector<Camera>& cameras,
                    const std::vector<Imagef>& targets, const RasterConfig& cfg = RasterConfig(),
                    const Vec3f& background = Vec3f::Zero());

/// 2x2 box-filter downsample to match Camera::half_resolution.
Imagef downsample_half(const Imagef& img);

}  // namespace splat
