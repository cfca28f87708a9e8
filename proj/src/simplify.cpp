#include "splat/simplify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "splat/quantile.hpp"

namespace splat {

GlobalImportance global_importance(const std::vector<ImportanceReport<float>>& reports, int n) {
    GlobalImportance g;
    g.accum_weight.assign(n, 0.0);
    g.intersections.assign(n, 0);
    for (const auto& r : reports) {
        if (static_cast<int>(r.importance.size()) != n)
            throw std::invalid_argument("global_importance: report size mismatch");
        for (int i = 0; i < n; ++i) {
            g.accum_weight[i] += r.importance[i];
            g.intersections[i] += r.max_pixel_count[i];
        }
    }
    return g;
}

GlobalImportance global_importance(const GaussianSet& set, const std::vector<Camera>& cameras,
                                   const RasterConfig& cfg) {
    std::vector<ImportanceReport<float>> reports;
    reports.reserve(cameras.size());
    for (const auto& cam : cameras) reports.push_back(accumulate_importance<float>(set, cam, cfg));
    return global_importance(reports, set.size());
}

SimplifyResult importance_sample(const GaussianSet& set, const std::vector<double>& importance,
                                 int target_count, uint64_t seed) {
    const int n = set.size();
    if (static_cast<int>(importance.size()) != n)
        throw std::invalid_argument("importance_sample: importance size mismatch");
    if (target_count < 1 || target_count > n)
        throw std::invalid_argument("importance_sample: target_count out of range");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    // Weighted draw without replacement: key_i = log(u_i)/w_i, keep the
    // largest keys. Zero weights are excluded here and only used as filler.
    std::vector<std::pair<double, int>> keyed;
    std::vector<int> zero_weight;
    keyed.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double u = std::max(uniform(rng), 1e-300);
        if (importance[i] > 0.0)
            keyed.emplace_back(std::log(u) / importance[i], i);
        else
            zero_weight.push_back(i);
    }

    std::vector<int> kept;
    kept.reserve(target_count);
    if (keyed.empty()) {
        // Documented fallback: uniform draw when nothing has importance.
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int r = 0; r < target_count; ++r) {
            std::uniform_int_distribution<int> pick(r, n - 1);
            std::swap(idx[r], idx[pick(rng)]);
        }
        kept.assign(idx.begin(), idx.begin() + target_count);
    } else {
        const int from_weighted = std::min<int>(target_count, static_cast<int>(keyed.size()));
        std::partial_sort(keyed.begin(), keyed.begin() + from_weighted, keyed.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        for (int r = 0; r < from_weighted; ++r) kept.push_back(keyed[r].second);
        int deficit = target_count - from_weighted;
        for (int r = 0; deficit > 0; --deficit, ++r) {
            std::uniform_int_distribution<int> pick(r, static_cast<int>(zero_weight.size()) - 1);
            std::swap(zero_weight[r], zero_weight[pick(rng)]);
            kept.push_back(zero_weight[r]);
        }
    }

    std::sort(kept.begin(), kept.end());
    SimplifyResult out;
    out.set = set.select(kept);
    out.kept = std::move(kept);
    return out;
}

SimplifyResult importance_prune(const GaussianSet& set, const std::vector<double>& importance,
                                double keep_q) {
    const int n = set.size();
    if (static_cast<int>(importance.size()) != n)
        throw std::invalid_argument("importance_prune: importance size mismatch");
    const std::vector<char> keep_flags = select_above_quantile(importance, keep_q);
    std::vector<int> kept;
    for (int i = 0; i < n; ++i)
        if (keep_flags[i]) kept.push_back(i);
    SimplifyResult out;
    out.set = set.select(kept);
    out.kept = std::move(kept);
    return out;
}

}  // namespace splat
