#include <doctest.h>

#include <algorithm>
#include <random>

#include "splat/camera.hpp"
#include "splat/gaussian_set.hpp"
#include "splat/quantile.hpp"
#include "splat/sh.hpp"
#include "splat/spatial.hpp"

#include "test_utils.hpp"

using namespace splat;

TEST_SUITE("core") {

TEST_CASE("rotation_from_quat: identity and quarter turn about z") {
    const Mat3<double> eye = rotation_from_quat(Vec4<double>(1, 0, 0, 0));
    CHECK((eye - Mat3<double>::Identity()).norm() == doctest::Approx(0.0));

    // 90 degrees about +z maps x to y.
    const double h = std::sqrt(0.5);
    const Mat3<double> r = rotation_from_quat(Vec4<double>(h, 0, 0, h));
    const Vec3<double> y = r * Vec3<double>(1, 0, 0);
    CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(1.0));
    CHECK(y[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotation_from_quat: normalizes input and stays orthonormal") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const Vec4<double> q(g(rng), g(rng), g(rng), g(rng));
        const Mat3<double> r = rotation_from_quat(q);
        const Mat3<double> r_scaled = rotation_from_quat(Vec4<double>(q * 3.7));
        CHECK((r * r.transpose() - Mat3<double>::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(r.determinant() == doctest::Approx(1.0));
        CHECK((r - r_scaled).cwiseAbs().maxCoeff() < 1e-12);
    }
    // Zero quaternion falls back to identity instead of dividing by zero.
    const Vec4<double> zero = Vec4<double>::Zero();
    CHECK((rotation_from_quat(zero) - Mat3<double>::Identity()).norm() == 0.0);
}

TEST_CASE("covariance_from_params: axis-aligned and rotated cases") {
    // Identity rotation: Sigma = diag(exp(s))^2.
    const Vec3<double> ls(std::log(1.0), std::log(2.0), std::log(3.0));
    const Mat3<double> cov = covariance_from_params(ls, Vec4<double>(1, 0, 0, 0));
    Mat3<double> want = Mat3<double>::Zero();
    want(0, 0) = 1.0;
    want(1, 1) = 4.0;
    want(2, 2) = 9.0;
    CHECK((cov - want).cwiseAbs().maxCoeff() < 1e-12);

    // Any rotation of an isotropic Gaussian leaves the covariance unchanged.
    std::mt19937 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const Vec4<double> q(g(rng), g(rng), g(rng), g(rng));
        const Vec3<double> iso = Vec3<double>::Constant(std::log(0.5));
        const Mat3<double> c = covariance_from_params(iso, q);
        CHECK((c - 0.25 * Mat3<double>::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }

    // General case against the independent construction R D R^T.
    for (int t = 0; t < 20; ++t) {
        const Vec4<double> q(g(rng), g(rng), g(rng), g(rng));
        const Vec3<double> s(g(rng) * 0.3, g(rng) * 0.3, g(rng) * 0.3);
        const Mat3<double> r = rotation_from_quat(q);
        const Vec3<double> var = (2.0 * s.array()).exp();
        const Mat3<double> ref = r * var.asDiagonal() * r.transpose();
        const Mat3<double> got = covariance_from_params(s, q);
        CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((got - got.transpose()).cwiseAbs().maxCoeff() == 0.0);  // exactly symmetric
    }
}

TEST_CASE("sh_basis: pinned low-order values") {
    double b[kShCoeffCount];
    const Vec3<double> up(0, 0, 1);
    sh_basis(up, 3, b);
    CHECK(b[0] == doctest::Approx(0.28209479177387814).epsilon(1e-14));
    CHECK(b[1] == 0.0);
    CHECK(b[2] == doctest::Approx(0.4886025119029199).epsilon(1e-14));
    CHECK(b[3] == 0.0);
    // Degree cutoff zeroes the higher bands.
    sh_basis(up, 1, b);
    for (int k = 4; k < kShCoeffCount; ++k) CHECK(b[k] == 0.0);
}

TEST_CASE("sh_basis: orthonormal under quasi-uniform sphere quadrature") {
    // Fibonacci-sphere quadrature: sum b_i b_j * (4 pi / n) approximates the
    // inner product on the sphere, which is the identity for an orthonormal
    // basis. Wrong normalization constants show up as O(1) errors.
    const int n = 20000;
    double gram[kShCoeffCount][kShCoeffCount] = {};
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        const Vec3<double> dir(r * std::cos(phi), r * std::sin(phi), z);
        double b[kShCoeffCount];
        sh_basis(dir, 3, b);
        for (int a = 0; a < kShCoeffCount; ++a)
            for (int c = a; c < kShCoeffCount; ++c) gram[a][c] += b[a] * b[c];
    }
    const double w = 4.0 * M_PI / n;
    for (int a = 0; a < kShCoeffCount; ++a) {
        for (int c = a; c < kShCoeffCount; ++c) {
            const double want = a == c ? 1.0 : 0.0;
            CHECK(gram[a][c] * w == doctest::Approx(want).epsilon(0.01).scale(1.0));
        }
    }
}

TEST_CASE("sh_basis_grad matches central differences") {
    std::mt19937 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    const double eps = 1e-6;
    for (int t = 0; t < 10; ++t) {
        Vec3<double> d(g(rng), g(rng), g(rng));
        d.normalize();
        Vec3<double> grad[kShCoeffCount];
        sh_basis_grad(d, 3, grad);
        for (int axis = 0; axis < 3; ++axis) {
            Vec3<double> up = d, dn = d;
            up[axis] += eps;
            dn[axis] -= eps;
            double bu[kShCoeffCount], bd[kShCoeffCount];
            sh_basis(up, 3, bu);
            sh_basis(dn, 3, bd);
            for (int k = 0; k < kShCoeffCount; ++k) {
                const double num = (bu[k] - bd[k]) / (2 * eps);
                CHECK(grad[k][axis] == doctest::Approx(num).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("sh_to_color: zero coefficients give mid gray, DC transform round-trips") {
    double sh[kShValueCount] = {};
    const Vec3<double> dir(0, 0, 1);
    const Vec3<double> gray = sh_to_color(sh, dir, 3);
    CHECK(gray[0] == doctest::Approx(0.5));
    CHECK(gray[1] == doctest::Approx(0.5));
    CHECK(gray[2] == doctest::Approx(0.5));

    const Vec3<double> rgb(0.2, 0.7, 0.95);
    const Vec3<double> dc = color_to_sh_dc(rgb);
    CHECK((sh_dc_to_color(dc) - rgb).cwiseAbs().maxCoeff() < 1e-14);
    // Written into the coefficient array, degree 0 reproduces the color.
    for (int c = 0; c < 3; ++c) sh[c] = dc[c];
    CHECK((sh_to_color(sh, dir, 0) - rgb).cwiseAbs().maxCoeff() < 1e-14);

    // Strongly negative DC clamps to zero and reports it.
    for (int c = 0; c < 3; ++c) sh[c] = -10.0;
    bool clamped[3] = {};
    const Vec3<double> black = sh_to_color(sh, dir, 0, clamped);
    CHECK(black.maxCoeff() == 0.0);
    CHECK(clamped[0]);
    CHECK(clamped[1]);
    CHECK(clamped[2]);
}

TEST_CASE("camera: pinned projection and pose helpers") {
    CameraT<double> cam;
    cam.width = 100;
    cam.height = 100;
    cam.fx = cam.fy = 100;
    cam.cx = cam.cy = 50;
    // Identity pose: +z in front of the camera.
    CHECK((cam.project(Vec3<double>(0, 0, 2)) - Vec2<double>(50, 50)).norm() < 1e-12);
    CHECK((cam.project(Vec3<double>(1, 0, 2)) - Vec2<double>(100, 50)).norm() < 1e-12);
    CHECK((cam.project(Vec3<double>(0, -1, 4)) - Vec2<double>(50, 25)).norm() < 1e-12);

    // look_at posed at (0,0,-4): origin lands 4 units in front, on the axis.
    const auto posed = testutil::front_camera<double>(64, 64, 4.0);
    CHECK((posed.to_camera(Vec3<double>::Zero()) - Vec3<double>(0, 0, 4)).norm() < 1e-12);
    CHECK((posed.center() - Vec3<double>(0, 0, -4)).norm() < 1e-12);
    CHECK(posed.rotation_orthonormal());
}

TEST_CASE("camera: rays re-project to their pixel center") {
    std::mt19937 rng(14);
    const auto cam = testutil::random_camera<double>(rng, 64, 48, 4.0);
    std::uniform_int_distribution<int> px(0, 63), py(0, 47);
    for (int t = 0; t < 25; ++t) {
        const int x = px(rng), y = py(rng);
        const Vec3<double> p = cam.center() + 3.0 * cam.ray_direction(x, y);
        const Vec2<double> uv = cam.project(cam.to_camera(p));
        CHECK(uv[0] == doctest::Approx(x + 0.5).epsilon(1e-10));
        CHECK(uv[1] == doctest::Approx(y + 0.5).epsilon(1e-10));
    }
}

TEST_CASE("camera: half_resolution halves projections exactly for even sizes") {
    std::mt19937 rng(15);
    const auto cam = testutil::random_camera<double>(rng, 64, 64, 4.0);
    const auto half = cam.half_resolution();
    CHECK(half.width == 32);
    CHECK(half.height == 32);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (int t = 0; t < 10; ++t) {
        const Vec3<double> p(u(rng), u(rng), u(rng));
        const Vec2<double> full = cam.project(cam.to_camera(p));
        const Vec2<double> got = half.project(half.to_camera(p));
        CHECK((got - 0.5 * full).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("camera: validate rejects degenerate configurations") {
    CameraT<float> cam = testutil::front_camera<float>(32, 32);
    CHECK_NOTHROW(cam.validate());
    CameraT<float> bad = cam;
    bad.width = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cam;
    bad.znear = -1.0f;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cam;
    bad.rotation(0, 0) = 2.0f;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("quantile_threshold: hand-computed order statistics") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    // keep 50%: h = 0.5 * 4 = 2 -> exactly the middle element.
    CHECK(quantile_threshold(v, 0.5) == doctest::Approx(3.0));
    // keep 99%: h = 0.01 * 4 = 0.04 -> 1 + 0.04 * (2 - 1).
    CHECK(quantile_threshold(v, 0.99) == doctest::Approx(1.04));
    // Unsorted input with duplicates: sorted {1,1,3,4,5}, h = 0.75*4 = 3.
    CHECK(quantile_threshold<double>({3, 1, 4, 1, 5}, 0.25) == doctest::Approx(4.0));
    // Single element: every quantile is that element.
    CHECK(quantile_threshold<double>({7}, 0.3) == doctest::Approx(7.0));

    CHECK_THROWS_AS(quantile_threshold<double>({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(quantile_threshold(v, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(quantile_threshold(v, 1.0), std::invalid_argument);
}

TEST_CASE("select_above_quantile: strict comparison and keep-all edge rule") {
    // tau = 2.5 for keep_q 0.5 on {1,2,3,4}: only 3 and 4 survive.
    const auto keep = select_above_quantile<double>({1, 2, 3, 4}, 0.5);
    CHECK(keep == std::vector<char>{0, 0, 1, 1});
    // All-equal input: nothing is strictly above tau, so everything stays.
    const auto all = select_above_quantile<double>({2, 2, 2}, 0.5);
    CHECK(all == std::vector<char>{1, 1, 1});
}

TEST_CASE("third_neighbor_distances matches brute force") {
    std::mt19937 rng(16);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<Vec3f> pts(200);
    for (auto& p : pts) p = Vec3f(u(rng), u(rng), u(rng));

    const auto got = third_neighbor_distances(pts);
    REQUIRE(got.size() == pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        std::vector<float> d;
        for (size_t j = 0; j < pts.size(); ++j)
            if (j != i) d.push_back((pts[i] - pts[j]).norm());
        std::nth_element(d.begin(), d.begin() + 2, d.end());
        CHECK(got[i] == doctest::Approx(d[2]).epsilon(1e-5));
    }
}

TEST_CASE("GridIndex: collinear points and off-grid queries") {
    std::vector<Vec3f> pts;
    for (int i = 0; i < 4; ++i) pts.push_back(Vec3f(float(i), 0, 0));
    GridIndex index(pts);
    CHECK(index.kth_neighbor_distance(0, 1) == doctest::Approx(1.0f));
    CHECK(index.kth_neighbor_distance(0, 2) == doctest::Approx(2.0f));
    CHECK(index.kth_neighbor_distance(0, 3) == doctest::Approx(3.0f));
    CHECK(index.kth_neighbor_distance(1, 1) == doctest::Approx(1.0f));
    CHECK(index.nearest_distance(Vec3f(1.4f, 0, 0)) == doctest::Approx(0.4f));
    CHECK(index.nearest_distance(Vec3f(10, 0, 0)) == doctest::Approx(7.0f));

    // Exact duplicates floor at the configured minimum instead of zero.
    const auto dup = third_neighbor_distances({Vec3f::Zero(), Vec3f::Zero(), Vec3f::Zero(),
                                               Vec3f::Zero()});
    for (float d : dup) CHECK(d == doctest::Approx(1e-7f));
}

TEST_CASE("GaussianSet: select gathers full rows, consistency check fires") {
    std::mt19937 rng(17);
    auto set = testutil::random_set<float>(rng, 3);
    const auto picked = set.select({2, 0});
    REQUIRE(picked.size() == 2);
    CHECK(picked.centers[0] == set.centers[2]);
    CHECK(picked.centers[1] == set.centers[0]);
    CHECK(picked.opacity_logits[0] == set.opacity_logits[2]);
    for (int k = 0; k < kShValueCount; ++k) {
        CHECK(picked.sh_at(0)[k] == set.sh_at(2)[k]);
        CHECK(picked.sh_at(1)[k] == set.sh_at(0)[k]);
    }

    auto other = testutil::random_set<float>(rng, 2);
    auto merged = set;
    merged.append(other);
    REQUIRE(merged.size() == 5);
    CHECK(merged.centers[3] == other.centers[0]);
    CHECK_NOTHROW(merged.check_consistent());
    merged.opacity_logits.pop_back();
    CHECK_THROWS_AS(merged.check_consistent(), std::logic_error);
}

TEST_CASE("GaussianSet: opacity and covariance accessors agree with the math") {
    GaussianSetT<double> set;
    set.resize(1);
    set.opacity_logits[0] = 0.0;
    CHECK(set.opacity(0) == doctest::Approx(0.5));
    set.opacity_logits[0] = std::log(3.0);  // sigmoid(ln 3) = 3/4
    CHECK(set.opacity(0) == doctest::Approx(0.75));
    set.log_scales[0] = Vec3<double>(std::log(2.0), 0, 0);
    CHECK(set.scale(0)[0] == doctest::Approx(2.0));
    CHECK(set.covariance(0)(0, 0) == doctest::Approx(4.0));
}

}  // TEST_SUITE("core")
