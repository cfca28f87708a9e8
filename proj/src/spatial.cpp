#include "splat/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splat {

GridIndex::GridIndex(const std::vector<Vec3f>& points) : points_(points) {
    Vec3f lo = Vec3f::Constant(std::numeric_limits<float>::max());
    Vec3f hi = Vec3f::Constant(std::numeric_limits<float>::lowest());
    for (const auto& p : points_) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    if (points_.empty()) {
        lo = hi = Vec3f::Zero();
    }
    origin_ = lo;
    const Vec3f extent = (hi - lo).cwiseMax(1e-6f);
    // Aim for a handful of points per cell.
    const float target_cells = std::cbrt(static_cast<float>(std::max<size_t>(points_.size(), 1)));
    cell_ = std::max(extent.maxCoeff() / std::max(target_cells, 1.0f), 1e-6f);
    nx_ = std::max(1, static_cast<int>(extent[0] / cell_) + 1);
    ny_ = std::max(1, static_cast<int>(extent[1] / cell_) + 1);
    nz_ = std::max(1, static_cast<int>(extent[2] / cell_) + 1);
    cells_.resize(static_cast<size_t>(nx_) * ny_ * nz_);
    for (int i = 0; i < static_cast<int>(points_.size()); ++i)
        cells_[cell_of(points_[i])].push_back(i);
}

int GridIndex::cell_of(const Vec3f& p) const {
    const Vec3f rel = p - origin_;
    int ix = std::clamp(static_cast<int>(rel[0] / cell_), 0, nx_ - 1);
    int iy = std::clamp(static_cast<int>(rel[1] / cell_), 0, ny_ - 1);
    int iz = std::clamp(static_cast<int>(rel[2] / cell_), 0, nz_ - 1);
    return (iz * ny_ + iy) * nx_ + ix;
}

void GridIndex::gather_shell(const Vec3f& p, int ring, std::vector<int>& out) const {
    const Vec3f rel = p - origin_;
    const int cx = std::clamp(static_cast<int>(rel[0] / cell_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>(rel[1] / cell_), 0, ny_ - 1);
    const int cz = std::clamp(static_cast<int>(rel[2] / cell_), 0, nz_ - 1);
    for (int dz = -ring; dz <= ring; ++dz) {
        for (int dy = -ring; dy <= ring; ++dy) {
            for (int dx = -ring; dx <= ring; ++dx) {
                if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                const int ix = cx + dx, iy = cy + dy, iz = cz + dz;
                if (ix < 0 || iy < 0 || iz < 0 || ix >= nx_ || iy >= ny_ || iz >= nz_) continue;
                const auto& cell = cells_[(static_cast<size_t>(iz) * ny_ + iy) * nx_ + ix];
                out.insert(out.end(), cell.begin(), cell.end());
            }
        }
    }
}

float GridIndex::nearest_distance(const Vec3f& query) const {
    if (points_.empty()) return std::numeric_limits<float>::infinity();
    float best = std::numeric_limits<float>::infinity();
    const int max_ring = std::max({nx_, ny_, nz_});
    std::vector<int> ids;
    for (int ring = 0; ring <= max_ring; ++ring) {
        // Once a candidate is known, shells beyond best/cell cannot improve it.
        if (best < std::numeric_limits<float>::infinity() &&
            static_cast<float>(ring - 1) * cell_ > best)
            break;
        ids.clear();
        gather_shell(query, ring, ids);
        for (int i : ids) best = std::min(best, (points_[i] - query).norm());
    }
    return best;
}

float GridIndex::kth_neighbor_distance(int i, int k) const {
    std::vector<float> dists;
    const Vec3f& q = points_[i];
    const int max_ring = std::max({nx_, ny_, nz_});
    std::vector<int> ids;
    float kth = std::numeric_limits<float>::infinity();
    for (int ring = 0; ring <= max_ring; ++ring) {
        if (static_cast<int>(dists.size()) >= k && static_cast<float>(ring - 1) * cell_ > kth)
            break;
        ids.clear();
        gather_shell(q, ring, ids);
        for (int j : ids) {
            if (j == i) continue;
            dists.push_back((points_[j] - q).norm());
        }
        if (static_cast<int>(dists.size()) >= k) {
            std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
            kth = dists[k - 1];
        }
    }
    if (static_cast<int>(dists.size()) < k) return std::numeric_limits<float>::infinity();
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    return dists[k - 1];
}

std::vector<float> third_neighbor_distances(const std::vector<Vec3f>& points, float min_dist) {
    std::vector<float> out(points.size(), min_dist);
    const int n = static_cast<int>(points.size());
    if (n < 2) return out;
    const int k = std::min(3, n - 1);
    if (n <= 256) {
        std::vector<float> d;
        d.reserve(n - 1);
        for (int i = 0; i < n; ++i) {
            d.clear();
            for (int j = 0; j < n; ++j)
                if (j != i) d.push_back((points[j] - points[i]).norm());
            std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
            out[i] = std::max(d[k - 1], min_dist);
        }
        return out;
    }
    GridIndex index(points);
    for (int i = 0; i < n; ++i)
        out[i] = std::max(index.kth_neighbor_distance(i, k), min_dist);
    return out;
}

}  // namespace splat
