#pragma once

#include <cmath>
#include <vector>

#include "splat/camera.hpp"
#include "splat/gaussian_set.hpp"
#include "splat/types.hpp"

namespace splat {

/// Rendering constants inherited from the 3DGS ecosystem. `apply_thresholds`
/// false switches to exact mode: no contribution floor, no early termination,
/// no alpha clamp and no pixel-footprint windowing, so the tiled result
/// matches a per-pixel evaluation of the full blending sum. Oracle tests rely
/// on that switch.
struct RasterConfig {
    int tile_size = 16;
    double transmittance_min = 1e-4;      // stop blending below this T
    double contribution_min = 1.0 / 255;  // skip samples with alpha below
    double alpha_max = 0.99;
    double lowpass = 0.3;                 // added to cov2d diagonal (pixels^2)
    double radius_sigmas = 3.0;           // pixel footprint radius
    bool apply_thresholds = true;
};

template <typename T>
struct ProjectedGaussian {
    Vec2<T> mean2d;          // pixels
    T cov2d[3];              // xx, xy, yy after low-pass
    T conic[3];              // inverse of cov2d
    T depth_mean;            // camera-space z of the center
    int radius;              // pixel extent (radius_sigmas * sigma_max)
    int index;               // row in the GaussianSet
    T opacity;
    Vec3<T> color;           // SH-evaluated for this view, clamped
    int x0, x1, y0, y1;      // pixel rect, half-open
    Vec3<T> center_world;
    Mat3<T> cov_world_inv;   // for mid-intersection depth along rays
    bool cov_degenerate;
};

template <typename T>
struct RenderOutput {
    int width = 0, height = 0;
    Image<T> color;                   // H x W x 3, composited over background
    Image<T> alpha;                   // H x W x 1
    Image<T> depth;                   // H x W x 1; 0 where no contributor
    Image<T> transmittance;           // H x W x 1, final T per pixel
    std::vector<int> max_contributor; // H*W Gaussian indices, -1 = background
};

/// Per-Gaussian blending-weight statistics for one view.
template <typename T>
struct ImportanceReport {
    std::vector<T> importance;       // sum of blending weights over pixels
    std::vector<T> max_weight;       // largest single blending weight
    std::vector<int> max_pixel_count;  // pixels where this Gaussian is argmax

    bool is_max_contributor(int i) const { return max_pixel_count[i] > 0; }
};

/// Projects the set into one view: EWA perspective propagation of the 3D
/// covariance plus the low-pass regularizer. Gaussians behind znear, with an
/// empty pixel rect, or masked out are dropped; the result is sorted by
/// camera-space center depth (ties by index).
template <typename T>
std::vector<ProjectedGaussian<T>> project(const GaussianSetT<T>& set, const CameraT<T>& cam,
                                          const RasterConfig& cfg,
                                          const std::vector<char>* visibility_mask = nullptr);

template <typename T>
RenderOutput<T> render(const GaussianSetT<T>& set, const CameraT<T>& cam, const RasterConfig& cfg,
                       const std::vector<char>* visibility_mask = nullptr,
                       const Vec3<T>& background = Vec3<T>::Zero(),
                       ImportanceReport<T>* report = nullptr);

/// Same traversal and thresholds as render, without producing images.
template <typename T>
ImportanceReport<T> accumulate_importance(const GaussianSetT<T>& set, const CameraT<T>& cam,
                                          const RasterConfig& cfg,
                                          const std::vector<char>* visibility_mask = nullptr);

/// Depth of the density maximum of a Gaussian along a unit-direction ray
/// (equivalently the midpoint of the two intersections with any ellipsoidal
/// level set): t* = (mu-o)^T Sigma^-1 d / (d^T Sigma^-1 d).
template <typename T>
T depth_along_ray(const Vec3<T>& center, const Mat3<T>& cov_inv, const Vec3<T>& origin,
                  const Vec3<T>& dir) {
    const Vec3<T> rel = center - origin;
    const Vec3<T> cd = cov_inv * dir;
    const T denom = dir.dot(cd);
    const T t = rel.dot(cd) / denom;
    if (!(t > T(0)) || !std::isfinite(t)) return rel.dot(dir);
    return t;
}

/// Mid-intersection depth for a parameterized Gaussian. Ill-conditioned
/// covariances (condition number above ~1e12) fall back to the depth of the
/// center along the ray.
template <typename T>
T depth_mid_of(const Vec3<T>& center, const Vec3<T>& log_scale, const Vec4<T>& rotation,
               const Vec3<T>& origin, const Vec3<T>& dir) {
    const T spread = log_scale.maxCoeff() - log_scale.minCoeff();
    if (T(2) * spread > T(std::log(1e12))) return (center - origin).dot(dir);
    const Mat3<T> cov = covariance_from_params(log_scale, rotation);
    return depth_along_ray(center, Mat3<T>(cov.inverse()), origin, dir);
}

namespace detail {

/// Front-to-back blending kernel shared by render, importance accumulation
/// and the backward pass, so every consumer sees identical thresholds and
/// ordering. Calls visit(list_pos, alpha, g2d, weight, T_before, clamped) for
/// each committed sample and returns the final transmittance.
template <typename T, typename Visitor>
T traverse_pixel(const std::vector<int>& tile_list,
                 const std::vector<ProjectedGaussian<T>>& proj, int px, int py,
                 const RasterConfig& cfg, Visitor&& visit) {
    const T x = T(px) + T(0.5);
    const T y = T(py) + T(0.5);
    T trans = T(1);
    for (int pos : tile_list) {
        const ProjectedGaussian<T>& pg = proj[pos];
        if (px < pg.x0 || px >= pg.x1 || py < pg.y0 || py >= pg.y1) continue;
        const T dx = pg.mean2d[0] - x;
        const T dy = pg.mean2d[1] - y;
        const T power =
            T(-0.5) * (pg.conic[0] * dx * dx + pg.conic[2] * dy * dy) - pg.conic[1] * dx * dy;
        if (power > T(0)) continue;
        const T g2d = std::exp(power);
        T alpha = pg.opacity * g2d;
        bool clamped = false;
        if (cfg.apply_thresholds) {
            if (alpha > T(cfg.alpha_max)) {
                alpha = T(cfg.alpha_max);
                clamped = true;
            }
            if (alpha < T(cfg.contribution_min)) continue;
        }
        const T next = trans * (T(1) - alpha);
        if (cfg.apply_thresholds && next < T(cfg.transmittance_min)) break;
        visit(pos, alpha, g2d, trans * alpha, trans, clamped);
        trans = next;
    }
    return trans;
}

struct TileGrid {
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<int>> lists;
};

/// Bins projected Gaussians (already depth-sorted) into tiles; per-tile lists
/// stay depth-sorted because insertion preserves order.
template <typename T>
TileGrid bin_tiles(const std::vector<ProjectedGaussian<T>>& proj, int width, int height,
                   int tile_size) {
    TileGrid grid;
    grid.tiles_x = (width + tile_size - 1) / tile_size;
    grid.tiles_y = (height + tile_size - 1) / tile_size;
    grid.lists.resize(static_cast<size_t>(grid.tiles_x) * grid.tiles_y);
    for (int pos = 0; pos < static_cast<int>(proj.size()); ++pos) {
        const auto& pg = proj[pos];
        const int tx0 = pg.x0 / tile_size;
        const int tx1 = (pg.x1 - 1) / tile_size;
        const int ty0 = pg.y0 / tile_size;
        const int ty1 = (pg.y1 - 1) / tile_size;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                grid.lists[static_cast<size_t>(ty) * grid.tiles_x + tx].push_back(pos);
    }
    return grid;
}

}  // namespace detail

extern template std::vector<ProjectedGaussian<float>> project(const GaussianSetT<float>&,
                                                              const CameraT<float>&,
                                                              const RasterConfig&,
                                                              const std::vector<char>*);
extern template std::vector<ProjectedGaussian<double>> project(const GaussianSetT<double>&,
                                                               const CameraT<double>&,
                                                               const RasterConfig&,
                                                               const std::vector<char>*);
extern template RenderOutput<float> render(const GaussianSetT<float>&, const CameraT<float>&,
                                           const RasterConfig&, const std::vector<char>*,
                                           const Vec3<float>&, ImportanceReport<float>*);
extern template RenderOutput<double> render(const GaussianSetT<double>&, const CameraT<double>&,
                                            const RasterConfig&, const std::vector<char>*,
                                            const Vec3<double>&, ImportanceReport<double>*);
extern template ImportanceReport<float> accumulate_importance(const GaussianSetT<float>&,
                                                              const CameraT<float>&,
                                                              const RasterConfig&,
                                                              const std::vector<char>*);
extern template ImportanceReport<double> accumulate_importance(const GaussianSetT<double>&,
                                                               const CameraT<double>&,
                                                               const RasterConfig&,
                                                               const std::vector<char>*);

}  // namespace splat
