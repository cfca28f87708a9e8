#pragma once

#include <cmath>
#include <cstddef>

#include "splat/types.hpp"

namespace splat {

/// Number of spherical-harmonic coefficients stored per Gaussian (degree 3).
inline constexpr int kShCoeffCount = 16;
inline constexpr int kShValueCount = kShCoeffCount * 3;  // 48 color values
inline constexpr int kShRestValueCount = kShValueCount - 3;

template <typename T>
Vec4<T> normalized_quat(const Vec4<T>& q) {
    T n = q.norm();
    if (!(n > T(0))) return Vec4<T>(T(1), T(0), T(0), T(0));
    return q / n;
}

/// Rotation matrix from a (w,x,y,z) quaternion; normalizes internally.
template <typename T>
Mat3<T> rotation_from_quat(const Vec4<T>& q_raw) {
    Vec4<T> q = normalized_quat(q_raw);
    const T w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3<T> r;
    r(0, 0) = T(1) - T(2) * (y * y + z * z);
    r(0, 1) = T(2) * (x * y - w * z);
    r(0, 2) = T(2) * (x * z + w * y);
    r(1, 0) = T(2) * (x * y + w * z);
    r(1, 1) = T(1) - T(2) * (x * x + z * z);
    r(1, 2) = T(2) * (y * z - w * x);
    r(2, 0) = T(2) * (x * z - w * y);
    r(2, 1) = T(2) * (y * z + w * x);
    r(2, 2) = T(1) - T(2) * (x * x + y * y);
    return r;
}

/// 3D covariance Sigma = R * diag(exp(s))^2 * R^T, built symmetric by construction.
template <typename T>
Mat3<T> covariance_from_params(const Vec3<T>& log_scale, const Vec4<T>& rotation) {
    Mat3<T> rot = rotation_from_quat(rotation);
    Vec3<T> scale = log_scale.array().exp();
    Mat3<T> m = rot * scale.asDiagonal();  // M = R S, Sigma = M M^T
    Mat3<T> cov;
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            T v = m.row(i).dot(m.row(j));
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }
    return cov;
}

/// Optimizable scene state stored as parallel arrays. SH coefficients are kept
/// at degree 3 (16 coefficients x 3 channels, coefficient-major); lower active
/// degrees simply ignore the tail at render time.
template <typename T>
struct GaussianSetT {
    std::vector<Vec3<T>> centers;
    std::vector<Vec3<T>> log_scales;
    std::vector<Vec4<T>> rotations;  // (w,x,y,z)
    std::vector<T> opacity_logits;
    std::vector<T> sh;  // size() * 48
    int active_sh_degree = 3;

    int size() const { return static_cast<int>(centers.size()); }
    bool empty() const { return centers.empty(); }

    void resize(int n) {
        centers.resize(n, Vec3<T>::Zero());
        log_scales.resize(n, Vec3<T>::Zero());
        rotations.resize(n, Vec4<T>(T(1), T(0), T(0), T(0)));
        opacity_logits.resize(n, T(0));
        sh.resize(static_cast<size_t>(n) * kShValueCount, T(0));
    }

    T* sh_at(int i) { return sh.data() + static_cast<size_t>(i) * kShValueCount; }
    const T* sh_at(int i) const { return sh.data() + static_cast<size_t>(i) * kShValueCount; }

    T opacity(int i) const { return sigmoid(opacity_logits[i]); }
    Vec3<T> scale(int i) const { return log_scales[i].array().exp(); }
    Mat3<T> covariance(int i) const { return covariance_from_params(log_scales[i], rotations[i]); }

    void check_consistent() const {
        const size_t n = centers.size();
        if (log_scales.size() != n || rotations.size() != n || opacity_logits.size() != n ||
            sh.size() != n * kShValueCount) {
            throw std::logic_error("GaussianSet parallel arrays out of sync");
        }
    }

    /// Gather the rows named in `keep` (original order is whatever `keep` says).
    GaussianSetT select(const std::vector<int>& keep) const {
        GaussianSetT out;
        out.active_sh_degree = active_sh_degree;
        out.resize(static_cast<int>(keep.size()));
        for (size_t r = 0; r < keep.size(); ++r) {
            const int i = keep[r];
            out.centers[r] = centers[i];
            out.log_scales[r] = log_scales[i];
            out.rotations[r] = rotations[i];
            out.opacity_logits[r] = opacity_logits[i];
            for (int k = 0; k < kShValueCount; ++k) out.sh_at(static_cast<int>(r))[k] = sh_at(i)[k];
        }
        return out;
    }

    void append(const GaussianSetT& other) {
        centers.insert(centers.end(), other.centers.begin(), other.centers.end());
        log_scales.insert(log_scales.end(), other.log_scales.begin(), other.log_scales.end());
        rotations.insert(rotations.end(), other.rotations.begin(), other.rotations.end());
        opacity_logits.insert(opacity_logits.end(), other.opacity_logits.begin(),
                              other.opacity_logits.end());
        sh.insert(sh.end(), other.sh.begin(), other.sh.end());
    }

    template <typename U>
    GaussianSetT<U> cast() const {
        GaussianSetT<U> out;
        out.active_sh_degree = active_sh_degree;
        out.resize(size());
        for (int i = 0; i < size(); ++i) {
            out.centers[i] = centers[i].template cast<U>();
            out.log_scales[i] = log_scales[i].template cast<U>();
            out.rotations[i] = rotations[i].template cast<U>();
            out.opacity_logits[i] = static_cast<U>(opacity_logits[i]);
            for (int k = 0; k < kShValueCount; ++k)
                out.sh_at(i)[k] = static_cast<U>(sh_at(i)[k]);
        }
        return out;
    }
};

using GaussianSet = GaussianSetT<float>;

}  // namespace splat
