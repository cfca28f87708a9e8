#include "splat/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace splat {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

template <typename T>
void gaussian_kernel(T out[kWindow]) {
    T sum = T(0);
    for (int i = 0; i < kWindow; ++i) {
        const T d = T(i - kWindow / 2);
        out[i] = std::exp(-d * d / T(2 * kSigma * kSigma));
        sum += out[i];
    }
    for (int i = 0; i < kWindow; ++i) out[i] /= sum;
}

// Separable "same" convolution with zero padding, per channel. The kernel is
// symmetric, so convolution and correlation coincide.
template <typename T>
Image<T> blur(const Image<T>& img, const T kernel[kWindow]) {
    const int half = kWindow / 2;
    Image<T> tmp(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                T acc = T(0);
                for (int k = -half; k <= half; ++k) {
                    const int xx = x + k;
                    if (xx < 0 || xx >= img.width) continue;
                    acc += kernel[k + half] * img.at(y, xx, c);
                }
                tmp.at(y, x, c) = acc;
            }
    Image<T> out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                T acc = T(0);
                for (int k = -half; k <= half; ++k) {
                    const int yy = y + k;
                    if (yy < 0 || yy >= img.height) continue;
                    acc += kernel[k + half] * tmp.at(yy, x, c);
                }
                out.at(y, x, c) = acc;
            }
    return out;
}

template <typename T>
void require_same_shape(const Image<T>& a, const Image<T>& b, const char* where) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

}  // namespace

template <typename T>
T l1_loss(const Image<T>& a, const Image<T>& b, Image<T>* grad) {
    require_same_shape(a, b, "l1_loss");
    const size_t n = a.size();
    if (grad) *grad = Image<T>(a.width, a.height, a.channels);
    T sum = T(0);
    const T inv_n = T(1) / T(n);
    for (size_t i = 0; i < n; ++i) {
        const T d = a.data[i] - b.data[i];
        sum += std::abs(d);
        if (grad) grad->data[i] = (d > T(0) ? inv_n : (d < T(0) ? -inv_n : T(0)));
    }
    return sum * inv_n;
}

template <typename T>
T ssim(const Image<T>& a, const Image<T>& b, Image<T>* grad_a) {
    require_same_shape(a, b, "ssim");
    const T c1 = T(0.01 * 0.01);
    const T c2 = T(0.03 * 0.03);
    T kernel[kWindow];
    gaussian_kernel(kernel);

    const int w = a.width, h = a.height, ch = a.channels;
    Image<T> aa(w, h, ch), bb(w, h, ch), ab(w, h, ch);
    for (size_t i = 0; i < a.size(); ++i) {
        aa.data[i] = a.data[i] * a.data[i];
        bb.data[i] = b.data[i] * b.data[i];
        ab.data[i] = a.data[i] * b.data[i];
    }
    const Image<T> mu_a = blur(a, kernel);
    const Image<T> mu_b = blur(b, kernel);
    const Image<T> m_aa = blur(aa, kernel);
    const Image<T> m_bb = blur(bb, kernel);
    const Image<T> m_ab = blur(ab, kernel);

    const size_t n = a.size();
    const T inv_n = T(1) / T(n);
    T total = T(0);
    // Terms that must be blurred once more for the gradient.
    Image<T> t1, t2, t3;
    if (grad_a) {
        t1 = Image<T>(w, h, ch);
        t2 = Image<T>(w, h, ch);
        t3 = Image<T>(w, h, ch);
    }
    for (size_t i = 0; i < n; ++i) {
        const T ma = mu_a.data[i], mb = mu_b.data[i];
        const T va = m_aa.data[i] - ma * ma;
        const T vb = m_bb.data[i] - mb * mb;
        const T cov = m_ab.data[i] - ma * mb;
        const T a1 = T(2) * ma * mb + c1;
        const T a2 = T(2) * cov + c2;
        const T b1 = ma * ma + mb * mb + c1;
        const T b2 = va + vb + c2;
        const T s = (a1 * a2) / (b1 * b2);
        total += s;
        if (grad_a) {
            const T ds_dmu = T(2) * (mb * a2 * b1 - ma * a1 * a2) / (b1 * b1 * b2);
            const T ds_dva = -a1 * a2 / (b1 * b2 * b2);
            const T ds_dcov = T(2) * a1 / (b1 * b2);
            // mu, variance and covariance all see `a` through the same blur;
            // fold the inner chain terms before the second blur pass.
            t1.data[i] = inv_n * (ds_dmu - T(2) * ma * ds_dva - mb * ds_dcov);
            t2.data[i] = inv_n * ds_dva;
            t3.data[i] = inv_n * ds_dcov;
        }
    }
    if (grad_a) {
        const Image<T> g1 = blur(t1, kernel);
        const Image<T> g2 = blur(t2, kernel);
        const Image<T> g3 = blur(t3, kernel);
        *grad_a = Image<T>(w, h, ch);
        for (size_t i = 0; i < n; ++i)
            grad_a->data[i] = g1.data[i] + T(2) * a.data[i] * g2.data[i] + b.data[i] * g3.data[i];
    }
    return total * inv_n;
}

template <typename T>
T photometric_loss(const Image<T>& rendered, const Image<T>& target, T lambda, Image<T>* grad) {
    Image<T> g_l1, g_ssim;
    const T l1 = l1_loss(rendered, target, grad ? &g_l1 : nullptr);
    const T s = ssim(rendered, target, grad ? &g_ssim : nullptr);
    if (grad) {
        *grad = Image<T>(rendered.width, rendered.height, rendered.channels);
        for (size_t i = 0; i < grad->size(); ++i)
            grad->data[i] = (T(1) - lambda) * g_l1.data[i] - lambda * g_ssim.data[i];
    }
    return (T(1) - lambda) * l1 + lambda * (T(1) - s);
}

template float l1_loss(const Image<float>&, const Image<float>&, Image<float>*);
template double l1_loss(const Image<double>&, const Image<double>&, Image<double>*);
template float ssim(const Image<float>&, const Image<float>&, Image<float>*);
template double ssim(const Image<double>&, const Image<double>&, Image<double>*);
template float photometric_loss(const Image<float>&, const Image<float>&, float, Image<float>*);
template double photometric_loss(const Image<double>&, const Image<double>&, double,
                                 Image<double>*);

}  // namespace splat
