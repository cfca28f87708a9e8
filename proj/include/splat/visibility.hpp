#pragma once

#include <iosfwd>
#include <vector>

#include "splat/rasterizer.hpp"

namespace splat {

/// Per-training-view boolean masks over the current Gaussian set. A table is
/// only valid for the Gaussian count it was built against; any event that
/// changes N must trigger a rebuild.
struct VisibilityTable {
    std::vector<std::vector<char>> masks;  // [view][gaussian]
    int gaussian_count = 0;
    int built_at_iter = -1;

    bool fresh_for(int current_n) const { return gaussian_count == current_n; }
    const std::vector<char>* mask_for(int view) const {
        return view >= 0 && view < static_cast<int>(masks.size()) ? &masks[view] : nullptr;
    }
};

/// Builds per-view masks: a Gaussian is visible in view k when its
/// accumulated blending weight exceeds that view's quantile threshold
/// (computed over the strictly positive importances). Zero-importance
/// Gaussians are always masked out.
VisibilityTable build_masks(const GaussianSet& set, const std::vector<Camera>& cameras,
                            double keep_q, const RasterConfig& cfg, int iter = -1);

/// True when `iter` lies in the culling window [begin, end) AND the table
/// matches the current Gaussian count. A stale table disables culling and
/// writes a warning instead of failing the training run.
bool culling_active(int iter, int begin, int end, const VisibilityTable& table, int current_n,
                    std::ostream* warnings = nullptr);

}  // namespace splat
