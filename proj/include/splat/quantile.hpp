#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace splat {

/// Keep-by-count threshold: the (1-keep_q)-quantile of `values` by
/// linear-interpolation order statistics, so that roughly a fraction keep_q
/// of entries satisfy v > tau. Degenerate distributions can leave nothing
/// strictly above tau; callers follow the keep-all edge rule (see
/// select_above_quantile).
template <typename T>
T quantile_threshold(std::vector<T> values, double keep_q) {
    if (values.empty()) throw std::invalid_argument("quantile_threshold: empty input");
    if (!(keep_q > 0.0 && keep_q < 1.0))
        throw std::invalid_argument("quantile_threshold: keep_q must be in (0,1)");
    std::sort(values.begin(), values.end());
    const double q = 1.0 - keep_q;
    const double h = q * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return static_cast<T>(static_cast<double>(values[lo]) +
                          frac * (static_cast<double>(values[hi]) - static_cast<double>(values[lo])));
}

/// Applies the quantile filter with the documented edge rule: entries strictly
/// above tau are kept; if nothing exceeds tau (e.g. all values equal), every
/// entry is kept. Returns a keep flag per entry of `values`.
template <typename T>
std::vector<char> select_above_quantile(const std::vector<T>& values, double keep_q) {
    const T tau = quantile_threshold(values, keep_q);
    std::vector<char> keep(values.size(), 0);
    bool any = false;
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i] > tau) {
            keep[i] = 1;
            any = true;
        }
    }
    if (!any) std::fill(keep.begin(), keep.end(), char(1));
    return keep;
}

}  // namespace splat
