#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "splat/rasterizer.hpp"

namespace splat {

/// Gradients of a scalar loss with respect to every Gaussian parameter,
/// parallel to GaussianSetT storage, plus the accumulated image-plane
/// statistic that drives progressive densification decisions.
template <typename T>
struct ParamGrads {
    std::vector<Vec3<T>> d_centers;
    std::vector<Vec3<T>> d_log_scales;
    std::vector<Vec4<T>> d_rotations;  // w.r.t. the raw (pre-normalization) quaternion
    std::vector<T> d_opacity_logits;
    std::vector<T> d_sh;                 // N x 48, same layout as GaussianSetT::sh
    std::vector<T> grad2d_accum;         // += ||dLoss/d mean2d||_2 per view
    std::vector<int> grad2d_count;       // views in which the Gaussian contributed

    void resize_zero(int n) {
        d_centers.assign(n, Vec3<T>::Zero());
        d_log_scales.assign(n, Vec3<T>::Zero());
        d_rotations.assign(n, Vec4<T>::Zero());
        d_opacity_logits.assign(n, T(0));
        d_sh.assign(static_cast<size_t>(n) * kShValueCount, T(0));
        grad2d_accum.assign(n, T(0));
        grad2d_count.assign(n, 0);
    }
    int size() const { return static_cast<int>(d_centers.size()); }

    void add(const ParamGrads& other) {
        for (int i = 0; i < size(); ++i) {
            d_centers[i] += other.d_centers[i];
            d_log_scales[i] += other.d_log_scales[i];
            d_rotations[i] += other.d_rotations[i];
            d_opacity_logits[i] += other.d_opacity_logits[i];
            grad2d_accum[i] += other.grad2d_accum[i];
            grad2d_count[i] += other.grad2d_count[i];
        }
        for (size_t k = 0; k < d_sh.size(); ++k) d_sh[k] += other.d_sh[k];
    }
};

/// Backward pass of render() for the color image: replays the forward
/// traversal with identical thresholds (treated as non-differentiable gates)
/// and chains through blending, the 2D Gaussian, EWA projection, covariance
/// construction, quaternion normalization and SH evaluation.
template <typename T>
ParamGrads<T> render_backward(const GaussianSetT<T>& set, const CameraT<T>& cam,
                              const RasterConfig& cfg, const Image<T>& d_color,
                              const std::vector<char>* visibility_mask = nullptr,
                              const Vec3<T>& background = Vec3<T>::Zero());

/// Worst relative error between analytic and central-difference gradients,
/// reported per parameter block. `loss_fn(color, grad_out)` returns the loss
/// and, when grad_out != nullptr, fills dLoss/dColor.
struct FiniteDiffReport {
    double center = 0, log_scale = 0, rotation = 0, opacity = 0, sh = 0;
    double worst() const {
        double m = center;
        for (double v : {log_scale, rotation, opacity, sh}) m = std::max(m, v);
        return m;
    }
};

template <typename T>
using ImageLossFn = std::function<T(const Image<T>&, Image<T>*)>;

/// `max_probes_per_block` caps the number of scalar slots probed per parameter
/// block (0 = probe every scalar); when capped, a shuffle seeded by
/// `probe_seed` picks which slots to evaluate so large scenes stay affordable
/// while every block still gets coverage.
template <typename T>
FiniteDiffReport finite_diff_check(const GaussianSetT<T>& set, const CameraT<T>& cam,
                                   const RasterConfig& cfg, const ImageLossFn<T>& loss_fn,
                                   T epsilon, const std::vector<char>* visibility_mask = nullptr,
                                   const Vec3<T>& background = Vec3<T>::Zero(),
                                   int max_probes_per_block = 0, std::uint64_t probe_seed = 0);

extern template struct ParamGrads<float>;
extern template struct ParamGrads<double>;
extern template ParamGrads<float> render_backward(const GaussianSetT<float>&, const CameraT<float>&,
                                                  const RasterConfig&, const Image<float>&,
                                                  const std::vector<char>*, const Vec3<float>&);
extern template ParamGrads<double> render_backward(const GaussianSetT<double>&,
                                                   const CameraT<double>&, const RasterConfig&,
                                                   const Image<double>&, const std::vector<char>*,
                                                   const Vec3<double>&);
extern template FiniteDiffReport finite_diff_check(const GaussianSetT<float>&,
                                                   const CameraT<float>&, const RasterConfig&,
                                                   const ImageLossFn<float>&, float,
                                                   const std::vector<char>*, const Vec3<float>&,
                                                   int, std::uint64_t);
extern template FiniteDiffReport finite_diff_check(const GaussianSetT<double>&,
                                                   const CameraT<double>&, const RasterConfig&,
                                                   const ImageLossFn<double>&, double,
                                                   const std::vector<char>*, const Vec3<double>&,
                                                   int, std::uint64_t);

}  // namespace splat
