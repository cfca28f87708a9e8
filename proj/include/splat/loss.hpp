#pragma once

#include "splat/types.hpp"

namespace splat {

/// Mean absolute difference. When `grad` is non-null it receives
/// d(loss)/d(a), i.e. sign(a - b) / element_count (0 at exact ties).
template <typename T>
T l1_loss(const Image<T>& a, const Image<T>& b, Image<T>* grad = nullptr);

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, unit dynamic range, zero padding at the borders. When `grad_a`
/// is non-null it receives d(mean SSIM)/d(a).
template <typename T>
T ssim(const Image<T>& a, const Image<T>& b, Image<T>* grad_a = nullptr);

/// Training loss: (1 - lambda) * L1 + lambda * (1 - SSIM). `grad` receives
/// the full analytic d(loss)/d(rendered).
template <typename T>
T photometric_loss(const Image<T>& rendered, const Image<T>& target, T lambda,
                   Image<T>* grad = nullptr);

extern template float l1_loss(const Image<float>&, const Image<float>&, Image<float>*);
extern template double l1_loss(const Image<double>&, const Image<double>&, Image<double>*);
extern template float ssim(const Image<float>&, const Image<float>&, Image<float>*);
extern template double ssim(const Image<double>&, const Image<double>&, Image<double>*);
extern template float photometric_loss(const Image<float>&, const Image<float>&, float,
                                       Image<float>*);
extern template double photometric_loss(const Image<double>&, const Image<double>&, double,
                                        Image<double>*);

}  // namespace splat
