#include "splat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "splat/spatial.hpp"

namespace splat {

template <typename T>
double psnr(const Image<T>& a, const Image<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        mse += d * d;
    }
    mse /= double(a.size());
    if (mse <= 0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

double mean_nearest(const std::vector<Vec3f>& from, const std::vector<Vec3f>& to) {
    double sum = 0;
    if (to.size() <= 2000) {
        for (const auto& p : from) {
            float best = std::numeric_limits<float>::max();
            for (const auto& q : to) best = std::min(best, (p - q).norm());
            sum += best;
        }
    } else {
        GridIndex index(to);
        for (const auto& p : from) sum += index.nearest_distance(p);
    }
    return sum / double(from.size());
}

}  // namespace

double chamfer(const std::vector<Vec3f>& p, const std::vector<Vec3f>& q) {
    if (p.empty() || q.empty()) throw std::invalid_argument("chamfer: empty point set");
    return 0.5 * (mean_nearest(p, q) + mean_nearest(q, p));
}

template double psnr(const Image<float>&, const Image<float>&);
template double psnr(const Image<double>&, const Image<double>&);

}  // namespace splat
