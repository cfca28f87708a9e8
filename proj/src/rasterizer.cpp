#include "splat/rasterizer.hpp"

#include <algorithm>
#include <cmath>

#include "splat/sh.hpp"

namespace splat {

template <typename T>
std::vector<ProjectedGaussian<T>> project(const GaussianSetT<T>& set, const CameraT<T>& cam,
                                          const RasterConfig& cfg,
                                          const std::vector<char>* visibility_mask) {
    const int n = set.size();
    if (visibility_mask && static_cast<int>(visibility_mask->size()) != n)
        throw std::invalid_argument("visibility mask size does not match Gaussian count");

    std::vector<ProjectedGaussian<T>> proj;
    proj.reserve(static_cast<size_t>(n));
    const Vec3<T> cam_center = cam.center();
    const bool exact = !cfg.apply_thresholds;
    const T log_cond_limit = T(std::log(1e12));

    for (int i = 0; i < n; ++i) {
        if (visibility_mask && !(*visibility_mask)[i]) continue;
        const Vec3<T> p = set.centers[i];
        const Vec3<T> p_cam = cam.to_camera(p);
        const T z = p_cam[2];
        if (z <= cam.znear) continue;

        ProjectedGaussian<T> pg;
        pg.index = i;
        pg.depth_mean = z;
        pg.mean2d = cam.project(p_cam);

        // EWA: propagate the 3D covariance through the projective Jacobian.
        const Mat3<T> cov3d = set.covariance(i);
        Mat23<T> J;
        J << cam.fx / z, T(0), -cam.fx * p_cam[0] / (z * z),
             T(0), cam.fy / z, -cam.fy * p_cam[1] / (z * z);
        const Mat23<T> M = J * cam.rotation;
        const Mat2<T> cov2d_m = M * cov3d * M.transpose();
        pg.cov2d[0] = cov2d_m(0, 0) + T(cfg.lowpass);
        pg.cov2d[1] = cov2d_m(0, 1);
        pg.cov2d[2] = cov2d_m(1, 1) + T(cfg.lowpass);
        const T det = pg.cov2d[0] * pg.cov2d[2] - pg.cov2d[1] * pg.cov2d[1];
        if (!(det > T(0))) continue;
        const T inv_det = T(1) / det;
        pg.conic[0] = pg.cov2d[2] * inv_det;
        pg.conic[1] = -pg.cov2d[1] * inv_det;
        pg.conic[2] = pg.cov2d[0] * inv_det;

        if (exact) {
            pg.radius = std::max(cam.width, cam.height);
            pg.x0 = 0; pg.x1 = cam.width;
            pg.y0 = 0; pg.y1 = cam.height;
        } else {
            const T mid = T(0.5) * (pg.cov2d[0] + pg.cov2d[2]);
            const T lambda_max = mid + std::sqrt(std::max(mid * mid - det, T(0)));
            pg.radius = static_cast<int>(std::ceil(T(cfg.radius_sigmas) * std::sqrt(lambda_max)));
            // Pixel (x, y) samples at center (x+0.5, y+0.5); keep pixels whose
            // center lies within `radius` of the mean on both axes.
            pg.x0 = std::max(0, static_cast<int>(std::ceil(pg.mean2d[0] - pg.radius - T(0.5))));
            pg.x1 = std::min(cam.width,
                             static_cast<int>(std::floor(pg.mean2d[0] + pg.radius - T(0.5))) + 1);
            pg.y0 = std::max(0, static_cast<int>(std::ceil(pg.mean2d[1] - pg.radius - T(0.5))));
            pg.y1 = std::min(cam.height,
                             static_cast<int>(std::floor(pg.mean2d[1] + pg.radius - T(0.5))) + 1);
            if (pg.x0 >= pg.x1 || pg.y0 >= pg.y1) continue;
        }

        pg.opacity = sigmoid(set.opacity_logits[i]);
        const Vec3<T> view_dir = (p - cam_center).normalized();
        bool clamped[3];
        pg.color = sh_to_color(set.sh_at(i), view_dir, set.active_sh_degree, clamped);

        pg.center_world = p;
        const Vec3<T>& s = set.log_scales[i];
        pg.cov_degenerate = T(2) * (s.maxCoeff() - s.minCoeff()) > log_cond_limit;
        pg.cov_world_inv = pg.cov_degenerate ? Mat3<T>::Identity() : Mat3<T>(cov3d.inverse());

        proj.push_back(pg);
    }

    std::sort(proj.begin(), proj.end(), [](const ProjectedGaussian<T>& a, const ProjectedGaussian<T>& b) {
        if (a.depth_mean != b.depth_mean) return a.depth_mean < b.depth_mean;
        return a.index < b.index;
    });
    return proj;
}

namespace {

// Shared implementation behind render() and accumulate_importance(). `out`
// may be null when only the importance statistics are wanted.
template <typename T>
void rasterize(const GaussianSetT<T>& set, const CameraT<T>& cam, const RasterConfig& cfg,
               const std::vector<char>* visibility_mask, const Vec3<T>& background,
               RenderOutput<T>* out, ImportanceReport<T>* report) {
    set.check_consistent();
    cam.validate();
    const int w = cam.width;
    const int h = cam.height;

    const auto proj = project(set, cam, cfg, visibility_mask);
    const auto grid = detail::bin_tiles(proj, w, h, cfg.tile_size);

    if (out) {
        out->width = w;
        out->height = h;
        out->color = Image<T>(w, h, 3);
        out->alpha = Image<T>(w, h, 1);
        out->depth = Image<T>(w, h, 1);
        out->transmittance = Image<T>(w, h, 1);
        out->max_contributor.assign(static_cast<size_t>(w) * h, -1);
    }
    if (report) {
        report->importance.assign(set.size(), T(0));
        report->max_weight.assign(set.size(), T(0));
        report->max_pixel_count.assign(set.size(), 0);
    }

    const Vec3<T> origin = cam.center();
    for (int ty = 0; ty < grid.tiles_y; ++ty) {
        for (int tx = 0; tx < grid.tiles_x; ++tx) {
            const auto& list = grid.lists[static_cast<size_t>(ty) * grid.tiles_x + tx];
            const int px1 = std::min(w, (tx + 1) * cfg.tile_size);
            const int py1 = std::min(h, (ty + 1) * cfg.tile_size);
            for (int py = ty * cfg.tile_size; py < py1; ++py) {
                for (int px = tx * cfg.tile_size; px < px1; ++px) {
                    Vec3<T> acc = Vec3<T>::Zero();
                    T w_max = T(0);
                    int pos_max = -1;
                    const T t_final = detail::traverse_pixel(
                        list, proj, px, py, cfg,
                        [&](int pos, T /*alpha*/, T /*g2d*/, T weight, T /*t_before*/,
                            bool /*clamped*/) {
                            const ProjectedGaussian<T>& pg = proj[pos];
                            if (out) acc += weight * pg.color;
                            if (weight > w_max) {
                                w_max = weight;
                                pos_max = pos;
                            }
                            if (report) {
                                report->importance[pg.index] += weight;
                                if (weight > report->max_weight[pg.index])
                                    report->max_weight[pg.index] = weight;
                            }
                        });
                    if (report && pos_max >= 0) report->max_pixel_count[proj[pos_max].index]++;
                    if (!out) continue;
                    acc += t_final * background;
                    for (int c = 0; c < 3; ++c) out->color.at(py, px, c) = acc[c];
                    out->alpha.at(py, px) = T(1) - t_final;
                    out->transmittance.at(py, px) = t_final;
                    if (pos_max >= 0) {
                        const ProjectedGaussian<T>& pg = proj[pos_max];
                        out->max_contributor[static_cast<size_t>(py) * w + px] = pg.index;
                        const Vec3<T> dir = cam.ray_direction(px, py);
                        T d;
                        if (pg.cov_degenerate)
                            d = (pg.center_world - origin).dot(dir);
                        else
                            d = depth_along_ray(pg.center_world, pg.cov_world_inv, origin, dir);
                        out->depth.at(py, px) = d;
                    }
                }
            }
        }
    }
}

}  // namespace

template <typename T>
RenderOutput<T> render(const GaussianSetT<T>& set, const CameraT<T>& cam, const RasterConfig& cfg,
                       const std::vector<char>* visibility_mask, const Vec3<T>& background,
                       ImportanceReport<T>* report) {
    RenderOutput<T> out;
    rasterize(set, cam, cfg, visibility_mask, background, &out, report);
    return out;
}

template <typename T>
ImportanceReport<T> accumulate_importance(const GaussianSetT<T>& set, const CameraT<T>& cam,
                                          const RasterConfig& cfg,
                                          const std::vector<char>* visibility_mask) {
    ImportanceReport<T> report;
    const Vec3<T> zero = Vec3<T>::Zero();
    rasterize(set, cam, cfg, visibility_mask, zero, static_cast<RenderOutput<T>*>(nullptr),
              &report);
    return report;
}

template std::vector<ProjectedGaussian<float>> project(const GaussianSetT<float>&,
                                                       const CameraT<float>&, const RasterConfig&,
                                                       const std::vector<char>*);
template std::vector<ProjectedGaussian<double>> project(const GaussianSetT<double>&,
                                                        const CameraT<double>&, const RasterConfig&,
                                                        const std::vector<char>*);
template RenderOutput<float> render(const GaussianSetT<float>&, const CameraT<float>&,
                                    const RasterConfig&, const std::vector<char>*,
                                    const Vec3<float>&, ImportanceReport<float>*);
template RenderOutput<double> render(const GaussianSetT<double>&, const CameraT<double>&,
                                     const RasterConfig&, const std::vector<char>*,
                                     const Vec3<double>&, ImportanceReport<double>*);
template ImportanceReport<float> accumulate_importance(const GaussianSetT<float>&,
                                                       const CameraT<float>&, const RasterConfig&,
                                                       const std::vector<char>*);
template ImportanceReport<double> accumulate_importance(const GaussianSetT<double>&,
                                                        const CameraT<double>&, const RasterConfig&,
                                                        const std::vector<char>*);

}  // namespace splat
