#pragma once

#include <random>
#include <string>
#include <vector>

#include "splat/gradients.hpp"
#include "splat/rasterizer.hpp"
#include "splat/visibility.hpp"

namespace splat {

/// How candidates for aggressive cloning are picked; MaxWeight is the
/// default, the others exist for the ablation harness.
enum class IdentCriterion { Random, Opacity, AccumWeight, MaxWeight };

IdentCriterion ident_criterion_from_string(const std::string& name);
std::string to_string(IdentCriterion c);

struct CriticalSelection {
    std::vector<char> critical;  // length N
    int count = 0;
};

/// MaxWeight mode: critical = Gaussians that are the maximum-weight
/// contributor for at least one pixel in at least one view AND whose best
/// single blending weight exceeds the keep_q quantile over the candidates
/// (keep-all edge rule when nothing strictly exceeds it). The other criteria
/// score every Gaussian (uniform random draw / opacity / summed importance)
/// and take the same number of Gaussians MaxWeight would have selected.
CriticalSelection identify_critical(const GaussianSet& set, const std::vector<Camera>& cameras,
                                    IdentCriterion criterion, double keep_q,
                                    const RasterConfig& cfg, std::mt19937& rng,
                                    const VisibilityTable* visibility = nullptr);

struct DensifyPlan {
    enum class Mode { Progressive, AggressiveClone };
    Mode mode = Mode::Progressive;
    std::vector<int> clone_indices;  // progressive: duplicated; aggressive: rewritten in place
    std::vector<int> split_indices;  // progressive only: removed, two children appended
    GaussianSet new_rows;            // rows appended on apply, already fully parameterized
    // Aggressive clone: in-place replacement parameters, parallel to clone_indices.
    std::vector<float> updated_opacity_logits;
    std::vector<Vec3f> updated_log_scales;

    bool empty() const { return clone_indices.empty() && split_indices.empty(); }
};

/// Each critical Gaussian is replaced by two identical copies at the same
/// center with alpha_new = 1 - sqrt(1 - alpha_old) and the covariance scaled
/// by k = alpha_old^2 * (2*alpha_new - alpha_new^2/sqrt(2))^-2, realized as a
/// uniform log-scale shift of ln(k)/2. Near-zero opacities are skipped (the
/// multiplier degenerates), near-one opacities are clamped before the sqrt.
DensifyPlan aggressive_clone(const GaussianSet& set, const std::vector<char>& critical);

/// 3DGS-style densification: Gaussians whose mean image-plane gradient
/// exceeds grad_threshold are cloned when small (max scale at most
/// scale_threshold * scene_extent) or split into two samples drawn from the
/// Gaussian with scales divided by 1.6.
DensifyPlan vanilla_clone_split(const GaussianSet& set, const ParamGrads<float>& grads,
                                float grad_threshold, float scale_threshold, float scene_extent,
                                std::mt19937& rng);

struct DensifyApplied {
    GaussianSet set;
    std::vector<int> moment_source;  // per new row: old row for Adam moments, -1 = zeroed
};

DensifyApplied apply_densify_plan(const GaussianSet& set, const DensifyPlan& plan);

/// Renders depth for every view, reprojects all valid pixels to world points
/// carrying their ground-truth colors, samples `sample_count` of them
/// uniformly without replacement, and builds a fresh set from the sample:
/// DC color from the pixel, opacity 0.1, isotropic scale from the distance
/// to the 3rd-nearest sampled neighbor, identity rotation. The old set is
/// discarded entirely. Throws when no pixel has a valid depth.
GaussianSet depth_reinitialize(const GaussianSet& set, const std::vector<Camera>& cameras,
                               const std::vector<Imagef>& images, int sample_count,
                               const RasterConfig& cfg, std::mt19937& rng);

enum class DensifyEvent { None, IdentifyClone, DepthReinit, ProgressiveCloneSplit };

struct DensifySchedule {
    int start = 500;
    int interval = 250;
    int end = 3000;         // events fire in [start, end)
    int reinit_iter = 2000; // aggressive only; overrides a clone on the same iteration
};

DensifyEvent densify_event_at(int iter, const DensifySchedule& sched, bool aggressive);

}  // namespace splat
