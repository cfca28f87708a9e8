#pragma once

#include <vector>

#include "splat/types.hpp"

namespace splat {

struct MetricReport {
    double psnr = 0;     // dB, capped at 99 for (near-)identical images
    double ssim = 0;     // [-1, 1]
    double chamfer = 0;  // world units; negative = not evaluated
};

/// 10 * log10(1 / MSE) on unit-range images, capped at 99 dB.
template <typename T>
double psnr(const Image<T>& a, const Image<T>& b);

/// Symmetric Chamfer distance between point sets:
/// 0.5 * (mean_p min_q ||p-q|| + mean_q min_p ||q-p||).
double chamfer(const std::vector<Vec3f>& p, const std::vector<Vec3f>& q);

extern template double psnr(const Image<float>&, const Image<float>&);
extern template double psnr(const Image<double>&, const Image<double>&);

}  // namespace splat
