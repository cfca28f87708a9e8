#include "splat/visibility.hpp"

#include <ostream>

#include "splat/quantile.hpp"

namespace splat {

VisibilityTable build_masks(const GaussianSet& set, const std::vector<Camera>& cameras,
                            double keep_q, const RasterConfig& cfg, int iter) {
    VisibilityTable table;
    table.gaussian_count = set.size();
    table.built_at_iter = iter;
    table.masks.reserve(cameras.size());
    for (const auto& cam : cameras) {
        const auto report = accumulate_importance<float>(set, cam, cfg, nullptr);
        std::vector<float> positive;
        positive.reserve(report.importance.size());
        for (float v : report.importance)
            if (v > 0.f) positive.push_back(v);
        std::vector<char> mask(set.size(), 0);
        if (!positive.empty()) {
            const float tau = quantile_threshold(positive, float(keep_q));
            bool any = false;
            for (int i = 0; i < set.size(); ++i) {
                mask[i] = report.importance[i] > tau;
                any = any || mask[i];
            }
            // Degenerate distribution (all positives equal): nothing strictly
            // exceeds tau; keep every positive-importance Gaussian instead.
            if (!any)
                for (int i = 0; i < set.size(); ++i) mask[i] = report.importance[i] > 0.f;
        }
        table.masks.push_back(std::move(mask));
    }
    return table;
}

bool culling_active(int iter, int begin, int end, const VisibilityTable& table, int current_n,
                    std::ostream* warnings) {
    if (iter < begin || iter >= end) return false;
    if (!table.fresh_for(current_n)) {
        if (warnings)
            *warnings << "visibility table stale (built for " << table.gaussian_count
                      << " Gaussians, scene has " << current_n << "); culling disabled at iteration "
                      << iter << "\n";
        return false;
    }
    return true;
}

}  // namespace splat
