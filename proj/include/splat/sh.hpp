#pragma once

#include <cmath>

#include "splat/gaussian_set.hpp"
#include "splat/types.hpp"

namespace splat {

// Real SH constants in the band order used across the 3DGS ecosystem.
inline constexpr double kSH_C0 = 0.28209479177387814;
inline constexpr double kSH_C1 = 0.4886025119029199;
inline constexpr double kSH_C2[5] = {1.0925484305920792, -1.0925484305920792,
                                     0.31539156525252005, -1.0925484305920792,
                                     0.5462742152960396};
inline constexpr double kSH_C3[7] = {-0.5900435899266435, 2.890611442640554,
                                     -0.4570457994644658, 0.3731763325901154,
                                     -0.4570457994644658, 1.445305721320277,
                                     -0.5900435899266435};

inline constexpr int sh_coeffs_for_degree(int degree) {
    return (degree + 1) * (degree + 1);
}

/// Evaluates the 16 basis functions at a unit direction; entries beyond the
/// active degree are left at zero.
template <typename T>
void sh_basis(const Vec3<T>& dir, int degree, T basis[kShCoeffCount]) {
    for (int i = 0; i < kShCoeffCount; ++i) basis[i] = T(0);
    basis[0] = T(kSH_C0);
    if (degree < 1) return;
    const T x = dir[0], y = dir[1], z = dir[2];
    basis[1] = -T(kSH_C1) * y;
    basis[2] = T(kSH_C1) * z;
    basis[3] = -T(kSH_C1) * x;
    if (degree < 2) return;
    const T xx = x * x, yy = y * y, zz = z * z;
    basis[4] = T(kSH_C2[0]) * x * y;
    basis[5] = T(kSH_C2[1]) * y * z;
    basis[6] = T(kSH_C2[2]) * (T(2) * zz - xx - yy);
    basis[7] = T(kSH_C2[3]) * x * z;
    basis[8] = T(kSH_C2[4]) * (xx - yy);
    if (degree < 3) return;
    basis[9] = T(kSH_C3[0]) * y * (T(3) * xx - yy);
    basis[10] = T(kSH_C3[1]) * x * y * z;
    basis[11] = T(kSH_C3[2]) * y * (T(4) * zz - xx - yy);
    basis[12] = T(kSH_C3[3]) * z * (T(2) * zz - T(3) * xx - T(3) * yy);
    basis[13] = T(kSH_C3[4]) * x * (T(4) * zz - xx - yy);
    basis[14] = T(kSH_C3[5]) * z * (xx - yy);
    basis[15] = T(kSH_C3[6]) * x * (xx - T(3) * yy);
}

/// Gradients of each basis function with respect to the (unnormalized-free)
/// direction components.
template <typename T>
void sh_basis_grad(const Vec3<T>& dir, int degree, Vec3<T> grad[kShCoeffCount]) {
    for (int i = 0; i < kShCoeffCount; ++i) grad[i].setZero();
    if (degree < 1) return;
    const T x = dir[0], y = dir[1], z = dir[2];
    grad[1] = Vec3<T>(T(0), -T(kSH_C1), T(0));
    grad[2] = Vec3<T>(T(0), T(0), T(kSH_C1));
    grad[3] = Vec3<T>(-T(kSH_C1), T(0), T(0));
    if (degree < 2) return;
    const T xx = x * x, yy = y * y, zz = z * z;
    grad[4] = T(kSH_C2[0]) * Vec3<T>(y, x, T(0));
    grad[5] = T(kSH_C2[1]) * Vec3<T>(T(0), z, y);
    grad[6] = T(kSH_C2[2]) * Vec3<T>(-T(2) * x, -T(2) * y, T(4) * z);
    grad[7] = T(kSH_C2[3]) * Vec3<T>(z, T(0), x);
    grad[8] = T(kSH_C2[4]) * Vec3<T>(T(2) * x, -T(2) * y, T(0));
    if (degree < 3) return;
    grad[9] = T(kSH_C3[0]) * Vec3<T>(T(6) * x * y, T(3) * xx - T(3) * yy, T(0));
    grad[10] = T(kSH_C3[1]) * Vec3<T>(y * z, x * z, x * y);
    grad[11] = T(kSH_C3[2]) * Vec3<T>(-T(2) * x * y, T(4) * zz - xx - T(3) * yy, T(8) * y * z);
    grad[12] = T(kSH_C3[3]) *
               Vec3<T>(-T(6) * x * z, -T(6) * y * z, T(6) * zz - T(3) * xx - T(3) * yy);
    grad[13] = T(kSH_C3[4]) * Vec3<T>(T(4) * zz - T(3) * xx - yy, -T(2) * x * y, T(8) * x * z);
    grad[14] = T(kSH_C3[5]) * Vec3<T>(T(2) * x * z, -T(2) * y * z, xx - yy);
    grad[15] = T(kSH_C3[6]) * Vec3<T>(T(3) * xx - T(3) * yy, -T(6) * x * y, T(0));
}

/// View-dependent color: sum of active bands plus the 0.5 offset, clamped to
/// be non-negative for rendering. `clamped` (when given) records per-channel
/// whether the clamp fired, for the backward gate.
template <typename T>
Vec3<T> sh_to_color(const T* sh, const Vec3<T>& view_dir, int active_degree,
                    bool clamped[3] = nullptr) {
    T basis[kShCoeffCount];
    sh_basis(view_dir, active_degree, basis);
    Vec3<T> rgb(T(0.5), T(0.5), T(0.5));
    const int n = sh_coeffs_for_degree(active_degree);
    for (int k = 0; k < n; ++k) {
        for (int c = 0; c < 3; ++c) rgb[c] += basis[k] * sh[k * 3 + c];
    }
    for (int c = 0; c < 3; ++c) {
        const bool neg = rgb[c] < T(0);
        if (clamped) clamped[c] = neg;
        if (neg) rgb[c] = T(0);
    }
    return rgb;
}

/// Inverse of the DC transform: coefficients that reproduce `rgb` at degree 0.
template <typename T>
Vec3<T> color_to_sh_dc(const Vec3<T>& rgb) {
    return (rgb.array() - T(0.5)) / T(kSH_C0);
}

template <typename T>
Vec3<T> sh_dc_to_color(const Vec3<T>& dc) {
    return dc.array() * T(kSH_C0) + T(0.5);
}

}  // namespace splat
