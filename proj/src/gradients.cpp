#include "splat/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "splat/sh.hpp"

namespace splat {

namespace {

template <typename T>
struct PixelSample {
    int pos;      // position in the projected list
    T alpha;      // as used in forward (post-clamp)
    T g2d;
    T weight;     // T_i * alpha
    T t_before;   // transmittance before this sample
    bool clamped;
};

// d(rotation matrix)/d(normalized quaternion component), q = (w, x, y, z).
template <typename T>
void quat_rotation_jacobians(const Vec4<T>& q, Mat3<T> dR[4]) {
    const T w = q[0], x = q[1], y = q[2], z = q[3];
    dR[0] << T(0), -z, y,
             z, T(0), -x,
             -y, x, T(0);
    dR[1] << T(0), y, z,
             y, T(-2) * x, -w,
             z, w, T(-2) * x;
    dR[2] << T(-2) * y, x, w,
             x, T(0), z,
             -w, z, T(-2) * y;
    dR[3] << T(-2) * z, -w, x,
             w, T(-2) * z, y,
             x, y, T(0);
    for (int k = 0; k < 4; ++k) dR[k] *= T(2);
}

}  // namespace

template <typename T>
ParamGrads<T> render_backward(const GaussianSetT<T>& set, const CameraT<T>& cam,
                              const RasterConfig& cfg, const Image<T>& d_color,
                              const std::vector<char>* visibility_mask,
                              const Vec3<T>& background) {
    set.check_consistent();
    cam.validate();
    if (d_color.width != cam.width || d_color.height != cam.height || d_color.channels != 3)
        throw std::invalid_argument("render_backward: dLoss/dColor shape mismatch");

    ParamGrads<T> grads;
    grads.resize_zero(set.size());

    const auto proj = project(set, cam, cfg, visibility_mask);
    const int n_proj = static_cast<int>(proj.size());
    if (n_proj == 0) return grads;
    const auto grid = detail::bin_tiles(proj, cam.width, cam.height, cfg.tile_size);

    // Per projected entry, accumulated over all pixels of this view.
    std::vector<Vec3<T>> d_col(n_proj, Vec3<T>::Zero());
    std::vector<Vec2<T>> d_mean2d(n_proj, Vec2<T>::Zero());
    std::vector<Mat2<T>> d_conic(n_proj, Mat2<T>::Zero());  // w.r.t. the full conic matrix
    std::vector<T> d_opac(n_proj, T(0));                    // w.r.t. sigmoid(opacity_logit)
    std::vector<char> touched(n_proj, 0);

    std::vector<PixelSample<T>> samples;
    samples.reserve(64);

    for (int ty = 0; ty < grid.tiles_y; ++ty) {
        for (int tx = 0; tx < grid.tiles_x; ++tx) {
            const auto& list = grid.lists[static_cast<size_t>(ty) * grid.tiles_x + tx];
            if (list.empty()) continue;
            const int px1 = std::min(cam.width, (tx + 1) * cfg.tile_size);
            const int py1 = std::min(cam.height, (ty + 1) * cfg.tile_size);
            for (int py = ty * cfg.tile_size; py < py1; ++py) {
                for (int px = tx * cfg.tile_size; px < px1; ++px) {
                    samples.clear();
                    detail::traverse_pixel(list, proj, px, py, cfg,
                                           [&](int pos, T alpha, T g2d, T weight, T t_before,
                                               bool clamped) {
                                               samples.push_back(
                                                   {pos, alpha, g2d, weight, t_before, clamped});
                                           });
                    if (samples.empty()) continue;
                    const Vec3<T> dLdC(d_color.at(py, px, 0), d_color.at(py, px, 1),
                                       d_color.at(py, px, 2));
                    const T x = T(px) + T(0.5);
                    const T y = T(py) + T(0.5);
                    // Back-to-front sweep. b is the color composited behind the
                    // current sample, normalized by its transmittance, so that
                    // dC/d alpha_i = T_i * (c_i - b) without any divisions.
                    Vec3<T> b = background;
                    for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
                        const PixelSample<T>& s = *it;
                        const ProjectedGaussian<T>& pg = proj[s.pos];
                        touched[s.pos] = 1;
                        d_col[s.pos] += s.weight * dLdC;
                        const T da = dLdC.dot(s.t_before * (pg.color - b));
                        if (!s.clamped) {
                            d_opac[s.pos] += da * s.g2d;
                            const T dpower = da * pg.opacity * s.g2d;
                            const T dx = pg.mean2d[0] - x;
                            const T dy = pg.mean2d[1] - y;
                            d_mean2d[s.pos][0] +=
                                dpower * (-(pg.conic[0] * dx + pg.conic[1] * dy));
                            d_mean2d[s.pos][1] +=
                                dpower * (-(pg.conic[2] * dy + pg.conic[1] * dx));
                            Mat2<T>& dq = d_conic[s.pos];
                            dq(0, 0) += dpower * T(-0.5) * dx * dx;
                            dq(0, 1) += dpower * T(-0.5) * dx * dy;
                            dq(1, 0) += dpower * T(-0.5) * dx * dy;
                            dq(1, 1) += dpower * T(-0.5) * dy * dy;
                        }
                        b = s.alpha * pg.color + (T(1) - s.alpha) * b;
                    }
                }
            }
        }
    }

    // Geometric chain from per-view 2D quantities down to the 3D parameters.
    const Vec3<T> cam_center = cam.center();
    for (int pos = 0; pos < n_proj; ++pos) {
        if (!touched[pos]) continue;
        const ProjectedGaussian<T>& pg = proj[pos];
        const int i = pg.index;

        grads.grad2d_accum[i] += d_mean2d[pos].norm();
        grads.grad2d_count[i] += 1;

        // conic = inverse(cov2d): d cov2d = -conic * d conic * conic.
        Mat2<T> Q;
        Q << pg.conic[0], pg.conic[1], pg.conic[1], pg.conic[2];
        const Mat2<T> dV = -Q * d_conic[pos] * Q;

        const Vec3<T> p = set.centers[i];
        const Vec3<T> p_cam = cam.to_camera(p);
        const T z = p_cam[2];
        Mat23<T> J;
        J << cam.fx / z, T(0), -cam.fx * p_cam[0] / (z * z),
             T(0), cam.fy / z, -cam.fy * p_cam[1] / (z * z);
        const Mat23<T> M = J * cam.rotation;
        const Mat3<T> cov3d = set.covariance(i);

        // cov2d = M cov3d M^T + lowpass: both dV and cov3d symmetric.
        const Mat3<T> d_cov3d = M.transpose() * dV * M;
        const Mat23<T> dM = T(2) * dV * M * cov3d;
        const Mat23<T> dJ = dM * cam.rotation.transpose();

        Vec3<T> d_pcam = Vec3<T>::Zero();
        d_pcam[0] += dJ(0, 2) * (-cam.fx / (z * z));
        d_pcam[1] += dJ(1, 2) * (-cam.fy / (z * z));
        d_pcam[2] += dJ(0, 0) * (-cam.fx / (z * z)) +
                     dJ(0, 2) * (T(2) * cam.fx * p_cam[0] / (z * z * z)) +
                     dJ(1, 1) * (-cam.fy / (z * z)) +
                     dJ(1, 2) * (T(2) * cam.fy * p_cam[1] / (z * z * z));
        // mean2d = (fx px/z + cx, fy py/z + cy)
        d_pcam[0] += d_mean2d[pos][0] * cam.fx / z;
        d_pcam[1] += d_mean2d[pos][1] * cam.fy / z;
        d_pcam[2] += d_mean2d[pos][0] * (-cam.fx * p_cam[0] / (z * z)) +
                     d_mean2d[pos][1] * (-cam.fy * p_cam[1] / (z * z));
        grads.d_centers[i] += cam.rotation.transpose() * d_pcam;

        // cov3d = M3 M3^T with M3 = R(q) diag(exp(s)).
        const Vec4<T> q_hat = normalized_quat(set.rotations[i]);
        const Mat3<T> R = rotation_from_quat(q_hat);
        const Vec3<T> scale = set.log_scales[i].array().exp();
        const Mat3<T> M3 = R * scale.asDiagonal();
        const Mat3<T> dM3 = T(2) * d_cov3d * M3;
        const Mat3<T> dR = dM3 * scale.asDiagonal();
        for (int k = 0; k < 3; ++k) {
            const T dS_kk = R.col(k).dot(dM3.col(k));
            grads.d_log_scales[i][k] += dS_kk * scale[k];
        }
        Mat3<T> dR_dq[4];
        quat_rotation_jacobians(q_hat, dR_dq);
        Vec4<T> d_qhat;
        for (int k = 0; k < 4; ++k) d_qhat[k] = dR.cwiseProduct(dR_dq[k]).sum();
        const T qnorm = set.rotations[i].norm();
        if (qnorm > T(1e-12)) {
            // q_hat = q/||q||: dq = (I - q_hat q_hat^T)/||q|| * d q_hat.
            grads.d_rotations[i] += (d_qhat - q_hat * q_hat.dot(d_qhat)) / qnorm;
        }

        // alpha = sigmoid(logit)
        grads.d_opacity_logits[i] += d_opac[pos] * pg.opacity * (T(1) - pg.opacity);

        // SH: color = clamp(0.5 + sum_k basis_k(dir) sh_k, >= 0); clamped
        // channels pass no gradient. dir depends on the center.
        const Vec3<T> u = p - cam_center;
        const T len = u.norm();
        const Vec3<T> dir = u / len;
        T basis[kShCoeffCount];
        sh_basis(dir, set.active_sh_degree, basis);
        bool clamped[3];
        (void)sh_to_color(set.sh_at(i), dir, set.active_sh_degree, clamped);
        Vec3<T> dc = d_col[pos];
        for (int c = 0; c < 3; ++c)
            if (clamped[c]) dc[c] = T(0);
        const int n_coeff = sh_coeffs_for_degree(set.active_sh_degree);
        T* dsh = grads.d_sh.data() + static_cast<size_t>(i) * kShValueCount;
        for (int k = 0; k < n_coeff; ++k)
            for (int c = 0; c < 3; ++c) dsh[k * 3 + c] += basis[k] * dc[c];
        if (set.active_sh_degree > 0) {
            Vec3<T> gbasis[kShCoeffCount];
            sh_basis_grad(dir, set.active_sh_degree, gbasis);
            Vec3<T> ddir = Vec3<T>::Zero();
            const T* shp = set.sh_at(i);
            for (int k = 1; k < n_coeff; ++k) {
                T coef = T(0);
                for (int c = 0; c < 3; ++c) coef += dc[c] * shp[k * 3 + c];
                ddir += gbasis[k] * coef;
            }
            grads.d_centers[i] += (ddir - dir * dir.dot(ddir)) / len;
        }
    }
    return grads;
}

template <typename T>
FiniteDiffReport finite_diff_check(const GaussianSetT<T>& set, const CameraT<T>& cam,
                                   const RasterConfig& cfg, const ImageLossFn<T>& loss_fn,
                                   T epsilon, const std::vector<char>* visibility_mask,
                                   const Vec3<T>& background, int max_probes_per_block,
                                   std::uint64_t probe_seed) {
    const auto loss_of = [&](const GaussianSetT<T>& s) {
        const auto out = render(s, cam, cfg, visibility_mask, background);
        return loss_fn(out.color, nullptr);
    };

    const auto out = render(set, cam, cfg, visibility_mask, background);
    Image<T> d_color(cam.width, cam.height, 3);
    (void)loss_fn(out.color, &d_color);
    const auto grads = render_backward(set, cam, cfg, d_color, visibility_mask, background);

    // Relative error with an absolute floor so that near-zero pairs compare
    // as equal instead of amplifying roundoff.
    const double floor_v = 1e-6;
    const auto rel = [&](double analytic, double numeric) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), floor_v});
        return std::abs(analytic - numeric) / denom;
    };

    FiniteDiffReport rep;
    GaussianSetT<T> s = set;
    const auto probe = [&](T& slot, double analytic, double& block_worst) {
        const T saved = slot;
        slot = saved + epsilon;
        const T up = loss_of(s);
        slot = saved - epsilon;
        const T down = loss_of(s);
        slot = saved;
        const double numeric = double(up - down) / (2.0 * double(epsilon));
        block_worst = std::max(block_worst, rel(analytic, numeric));
    };

    // Enumerate the scalar slots of one block as (gaussian, component) pairs,
    // optionally thinned to the probe budget by a seeded shuffle.
    std::mt19937_64 pick(probe_seed);
    const auto slots_of = [&](int components) {
        std::vector<std::pair<int, int>> slots;
        slots.reserve(static_cast<size_t>(set.size()) * static_cast<size_t>(components));
        for (int i = 0; i < set.size(); ++i)
            for (int k = 0; k < components; ++k) slots.emplace_back(i, k);
        if (max_probes_per_block > 0 &&
            slots.size() > static_cast<size_t>(max_probes_per_block)) {
            std::shuffle(slots.begin(), slots.end(), pick);
            slots.resize(static_cast<size_t>(max_probes_per_block));
        }
        return slots;
    };

    for (const auto& [i, k] : slots_of(3))
        probe(s.centers[i][k], grads.d_centers[i][k], rep.center);
    for (const auto& [i, k] : slots_of(3))
        probe(s.log_scales[i][k], grads.d_log_scales[i][k], rep.log_scale);
    for (const auto& [i, k] : slots_of(4))
        probe(s.rotations[i][k], grads.d_rotations[i][k], rep.rotation);
    for (const auto& [i, k] : slots_of(1))
        probe(s.opacity_logits[i], grads.d_opacity_logits[i], rep.opacity);
    const int n_coeff = sh_coeffs_for_degree(set.active_sh_degree);
    for (const auto& [i, k] : slots_of(n_coeff * 3))
        probe(s.sh_at(i)[k], grads.d_sh[static_cast<size_t>(i) * kShValueCount + k], rep.sh);
    return rep;
}

template struct ParamGrads<float>;
template struct ParamGrads<double>;
template ParamGrads<float> render_backward(const GaussianSetT<float>&, const CameraT<float>&,
                                           const RasterConfig&, const Image<float>&,
                                           const std::vector<char>*, const Vec3<float>&);
template ParamGrads<double> render_backward(const GaussianSetT<double>&, const CameraT<double>&,
                                            const RasterConfig&, const Image<double>&,
                                            const std::vector<char>*, const Vec3<double>&);
template FiniteDiffReport finite_diff_check(const GaussianSetT<float>&, const CameraT<float>&,
                                            const RasterConfig&, const ImageLossFn<float>&, float,
                                            const std::vector<char>*, const Vec3<float>&, int,
                                            std::uint64_t);
template FiniteDiffReport finite_diff_check(const GaussianSetT<double>&, const CameraT<double>&,
                                            const RasterConfig&, const ImageLossFn<double>&, double,
                                            const std::vector<char>*, const Vec3<double>&, int,
                                            std::uint64_t);

}  // namespace splat
