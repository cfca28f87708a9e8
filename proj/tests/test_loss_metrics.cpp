#include <doctest.h>

#include <random>

#include "splat/loss.hpp"
#include "splat/metrics.hpp"

using namespace splat;

namespace {

template <typename T>
Image<T> random_image(std::mt19937& rng, int w, int h, int c = 3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image<T> img(w, h, c);
    for (auto& v : img.data) v = T(u(rng));
    return img;
}

// Direct-convolution SSIM written from the published formula: 11x11 Gaussian
// window (sigma 1.5), K1 = 0.01, K2 = 0.03, unit dynamic range, zero padding.
// Deliberately naive (quadratic loops, no incremental tricks).
double reference_ssim(const Image<double>& a, const Image<double>& b) {
    constexpr int R = 5;
    double w[2 * R + 1][2 * R + 1];
    double wsum = 0;
    for (int dy = -R; dy <= R; ++dy)
        for (int dx = -R; dx <= R; ++dx) {
            w[dy + R][dx + R] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
            wsum += w[dy + R][dx + R];
        }
    for (auto& row : w)
        for (auto& v : row) v /= wsum;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0;
    for (int ch = 0; ch < a.channels; ++ch) {
        for (int y = 0; y < a.height; ++y) {
            for (int x = 0; x < a.width; ++x) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int dy = -R; dy <= R; ++dy) {
                    for (int dx = -R; dx <= R; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        const bool in =
                            yy >= 0 && yy < a.height && xx >= 0 && xx < a.width;
                        const double va = in ? a.at(yy, xx, ch) : 0.0;
                        const double vb = in ? b.at(yy, xx, ch) : 0.0;
                        const double wk = w[dy + R][dx + R];
                        ma += wk * va;
                        mb += wk * vb;
                        saa += wk * va * va;
                        sbb += wk * vb * vb;
                        sab += wk * va * vb;
                    }
                }
                const double var_a = saa - ma * ma;
                const double var_b = sbb - mb * mb;
                const double cov = sab - ma * mb;
                total += (2 * ma * mb + c1) * (2 * cov + c2) /
                         ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            }
        }
    }
    return total / double(a.size());
}

}  // namespace

TEST_SUITE("loss_metrics") {

TEST_CASE("l1_loss: constant offset and its gradient") {
    Image<double> a(8, 6, 3), b(8, 6, 3);
    for (auto& v : b.data) v = 0.3;
    for (auto& v : a.data) v = 0.5;  // a - b = +0.2 everywhere
    Image<double> grad;
    CHECK(l1_loss(a, b, &grad) == doctest::Approx(0.2));
    const double n = 8.0 * 6.0 * 3.0;
    for (double g : grad.data) CHECK(g == doctest::Approx(1.0 / n));

    // Symmetric drop below: gradient flips sign.
    for (auto& v : a.data) v = 0.1;
    CHECK(l1_loss(a, b, &grad) == doctest::Approx(0.2));
    for (double g : grad.data) CHECK(g == doctest::Approx(-1.0 / n));

    CHECK(l1_loss(b, b) == 0.0);
}

TEST_CASE("ssim matches the direct-convolution reference") {
    std::mt19937 rng(40);
    for (int t = 0; t < 3; ++t) {
        const auto a = random_image<double>(rng, 24, 20);
        // Correlated second image: reference formula must track covariance.
        auto b = a;
        std::uniform_real_distribution<double> u(-0.2, 0.2);
        for (auto& v : b.data) v = std::clamp(v + u(rng), 0.0, 1.0);
        CHECK(ssim(a, b) == doctest::Approx(reference_ssim(a, b)).epsilon(1e-9));
        CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Uncorrelated noise scores clearly below identical images.
    const auto x = random_image<double>(rng, 24, 20);
    const auto y = random_image<double>(rng, 24, 20);
    CHECK(ssim(x, y) < 0.2);
}

TEST_CASE("ssim gradient matches finite differences") {
    std::mt19937 rng(41);
    const auto a = random_image<double>(rng, 16, 12);
    const auto b = random_image<double>(rng, 16, 12);
    Image<double> grad;
    (void)ssim(a, b, &grad);
    std::uniform_int_distribution<int> px(0, 15), py(0, 11), pc(0, 2);
    const double eps = 1e-6;
    for (int t = 0; t < 20; ++t) {
        auto probe = a;
        const int x = px(rng), y = py(rng), c = pc(rng);
        probe.at(y, x, c) = a.at(y, x, c) + eps;
        const double up = ssim(probe, b);
        probe.at(y, x, c) = a.at(y, x, c) - eps;
        const double down = ssim(probe, b);
        const double num = (up - down) / (2 * eps);
        CHECK(grad.at(y, x, c) == doctest::Approx(num).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("photometric_loss: mixture weights and analytic gradient") {
    std::mt19937 rng(42);
    const auto a = random_image<double>(rng, 16, 12);
    const auto b = random_image<double>(rng, 16, 12);

    // lambda = 0 reduces to pure L1; lambda = 1 to pure DSSIM.
    CHECK(photometric_loss(a, b, 0.0) == doctest::Approx(l1_loss(a, b)));
    CHECK(photometric_loss(a, b, 1.0) == doctest::Approx(1.0 - ssim(a, b)));
    const double lam = 0.2;
    CHECK(photometric_loss(a, b, lam) ==
          doctest::Approx((1 - lam) * l1_loss(a, b) + lam * (1.0 - ssim(a, b))));

    Image<double> grad;
    (void)photometric_loss(a, b, lam, &grad);
    std::uniform_int_distribution<int> px(0, 15), py(0, 11), pc(0, 2);
    const double eps = 1e-6;
    for (int t = 0; t < 20; ++t) {
        auto probe = a;
        const int x = px(rng), y = py(rng), c = pc(rng);
        probe.at(y, x, c) = a.at(y, x, c) + eps;
        const double up = photometric_loss(probe, b, lam);
        probe.at(y, x, c) = a.at(y, x, c) - eps;
        const double down = photometric_loss(probe, b, lam);
        CHECK(grad.at(y, x, c) ==
              doctest::Approx((up - down) / (2 * eps)).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("psnr: closed-form offsets and the identical-image cap") {
    Image<double> a(10, 10, 3), b(10, 10, 3);
    for (auto& v : a.data) v = 0.5;
    // Uniform offset of 1/255: psnr = 20 log10(255) = 48.1308 dB.
    b = a;
    for (auto& v : b.data) v += 1.0 / 255.0;
    CHECK(psnr(a, b) == doctest::Approx(48.1308).epsilon(1e-4));
    // Offset 0.1: 10 log10(1 / 0.01) = 20 dB.
    b = a;
    for (auto& v : b.data) v += 0.1;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-10));

    CHECK(psnr(a, a) == 99.0);

    Image<double> wrong(9, 10, 3);
    CHECK_THROWS_AS(psnr(a, wrong), std::invalid_argument);
}

TEST_CASE("chamfer: brute-force reference, symmetry, hand examples") {
    // Single pair at distance 1 in both directions.
    CHECK(chamfer({Vec3f::Zero()}, {Vec3f(1, 0, 0)}) == doctest::Approx(1.0));
    // Identical sets: zero.
    std::mt19937 rng(43);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<Vec3f> p(64);
    for (auto& v : p) v = Vec3f(u(rng), u(rng), u(rng));
    CHECK(chamfer(p, p) == doctest::Approx(0.0));

    // Asymmetric counts against an O(n m) reference.
    std::vector<Vec3f> q(17);
    for (auto& v : q) v = Vec3f(u(rng), u(rng), u(rng));
    auto directed = [](const std::vector<Vec3f>& from, const std::vector<Vec3f>& to) {
        double total = 0;
        for (const auto& f : from) {
            double best = std::numeric_limits<double>::max();
            for (const auto& t : to) best = std::min(best, double((f - t).norm()));
            total += best;
        }
        return total / double(from.size());
    };
    const double ref = 0.5 * (directed(p, q) + directed(q, p));
    CHECK(chamfer(p, q) == doctest::Approx(ref).epsilon(1e-6));
    CHECK(chamfer(q, p) == doctest::Approx(chamfer(p, q)).epsilon(1e-12));

    CHECK_THROWS_AS(chamfer({}, p), std::invalid_argument);
}

}  // TEST_SUITE("loss_metrics")
