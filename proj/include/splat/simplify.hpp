#pragma once

#include <cstdint>
#include <vector>

#include "splat/rasterizer.hpp"

namespace splat {

/// Per-Gaussian importance summed over all training views, plus the number
/// of pixels (over all views) where the Gaussian was the maximum-weight
/// contributor. Either can drive simplification.
struct GlobalImportance {
    std::vector<double> accum_weight;
    std::vector<long> intersections;
};

GlobalImportance global_importance(const std::vector<ImportanceReport<float>>& reports, int n);

/// Convenience: gathers per-view reports with the render thresholds and no
/// visibility mask.
GlobalImportance global_importance(const GaussianSet& set, const std::vector<Camera>& cameras,
                                   const RasterConfig& cfg);

struct SimplifyResult {
    GaussianSet set;
    std::vector<int> kept;  // ascending original indices of the survivors
};

/// Keeps `target_count` Gaussians drawn without replacement with probability
/// proportional to importance (Efraimidis-Spirakis exponential keys).
/// All-zero importance falls back to a uniform draw; when the positive-
/// importance entries cannot fill the target, the remainder is drawn
/// uniformly from the zero-importance ones.
SimplifyResult importance_sample(const GaussianSet& set, const std::vector<double>& importance,
                                 int target_count, uint64_t seed);

/// Keeps Gaussians whose importance strictly exceeds the keep_q quantile
/// threshold; if nothing does (degenerate distribution), keeps everything.
SimplifyResult importance_prune(const GaussianSet& set, const std::vector<double>& importance,
                                double keep_q);

}  // namespace splat
