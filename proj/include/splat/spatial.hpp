#pragma once

#include <vector>

#include "splat/types.hpp"

namespace splat {

/// Uniform-grid index over a 3D point set for nearest-neighbor queries.
class GridIndex {
public:
    explicit GridIndex(const std::vector<Vec3f>& points);

    /// Distance from `query` to its nearest indexed point.
    float nearest_distance(const Vec3f& query) const;

    /// Distance to the k-th nearest neighbor of point `i`, excluding `i`
    /// itself (k = 1 means the closest other point).
    float kth_neighbor_distance(int i, int k) const;

private:
    const std::vector<Vec3f>& points_;
    Vec3f origin_;
    float cell_ = 1.0f;
    int nx_ = 1, ny_ = 1, nz_ = 1;
    std::vector<std::vector<int>> cells_;

    int cell_of(const Vec3f& p) const;
    void gather_shell(const Vec3f& p, int ring, std::vector<int>& out) const;
};

/// Distance to the 3rd-nearest neighbor for every point (brute force for tiny
/// sets, grid otherwise). Zero-distance duplicates are floored at `min_dist`.
std::vector<float> third_neighbor_distances(const std::vector<Vec3f>& points,
                                            float min_dist = 1e-7f);

}  // namespace splat
