#include "splat/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "splat/sh.hpp"

namespace splat {

namespace {

// Fibonacci sphere: n roughly uniform directions, no randomness needed.
Vec3f sphere_direction(int k, int n) {
    const float golden = float((1.0 + std::sqrt(5.0)) / 2.0);
    const float z = 1.f - (2.f * k + 1.f) / float(n);
    const float r = std::sqrt(std::max(0.f, 1.f - z * z));
    const float phi = 2.f * float(M_PI) * float(k) / golden;
    return Vec3f(r * std::cos(phi), z, r * std::sin(phi));
}

void hash_bytes(uint64_t& h, const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
}

template <typename T>
void hash_value(uint64_t& h, const T& v) {
    hash_bytes(h, &v, sizeof(T));
}

}  // namespace

SyntheticScene generate_synthetic(uint64_t seed, int n_gaussians, int n_views, int resolution,
                                  const RasterConfig& cfg) {
    if (n_gaussians < 1) throw std::invalid_argument("generate_synthetic: need >= 1 Gaussian");
    if (n_views < 2) throw std::invalid_argument("generate_synthetic: need >= 2 views");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> unit(0.f, 1.f);
    std::normal_distribution<float> gauss(0.f, 1.f);
    const auto uniform_in = [&](float lo, float hi) { return lo + (hi - lo) * unit(rng); };

    SyntheticScene scene;
    GaussianSet& gt = scene.ground_truth;
    gt.active_sh_degree = 3;
    gt.resize(n_gaussians);
    // Rejection-sampled centers: enforcing a minimum separation keeps the
    // blobs individually resolvable, so the scene has recoverable geometry
    // rather than one merged translucent cloud. The separation shrinks if a
    // draw budget is exhausted, so any count still terminates.
    float min_sep = 0.18f;
    for (int i = 0; i < n_gaussians; ++i) {
        for (int attempt = 0;; ++attempt) {
            const Vec3f c(uniform_in(-0.5f, 0.5f), uniform_in(-0.5f, 0.5f),
                          uniform_in(-0.5f, 0.5f));
            bool ok = true;
            for (int j = 0; j < i && ok; ++j)
                ok = (gt.centers[j] - c).norm() >= min_sep;
            if (ok) {
                gt.centers[i] = c;
                break;
            }
            if (attempt == 200) {
                min_sep *= 0.8f;
                attempt = 0;
            }
        }
        for (int k = 0; k < 3; ++k) gt.log_scales[i][k] = std::log(uniform_in(0.03f, 0.12f));
        Vec4f q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        gt.rotations[i] = normalized_quat(q);
        // High opacities give the scene well-defined geometry (occlusions and
        // depth behave like surfaces), which reinitialization depends on.
        gt.opacity_logits[i] = logit(uniform_in(0.8f, 0.99f));
        const Vec3f rgb(uniform_in(0.1f, 0.9f), uniform_in(0.1f, 0.9f), uniform_in(0.1f, 0.9f));
        const Vec3f dc = color_to_sh_dc(rgb);
        float* sh = gt.sh_at(i);
        for (int c = 0; c < 3; ++c) sh[c] = dc[c];
        // Mild view dependence so SH staging matters without dominating.
        for (int k = 3; k < kShValueCount; ++k) sh[k] = 0.05f * gauss(rng);
    }

    const float fov = 50.f * float(M_PI) / 180.f;
    const float focal = 0.5f * float(resolution) / std::tan(0.5f * fov);
    for (int k = 0; k < n_views; ++k) {
        Camera cam;
        cam.width = cam.height = resolution;
        cam.fx = cam.fy = focal;
        cam.cx = cam.cy = 0.5f * float(resolution);
        const Vec3f pos = 3.f * sphere_direction(k, n_views);
        const Vec3f target = Vec3f::Zero();
        look_at(pos, target, Vec3f(0.f, 1.f, 0.f), cam.rotation, cam.translation);
        cam.validate();
        scene.bundle.cameras.push_back(cam);
    }

    for (const auto& cam : scene.bundle.cameras)
        scene.bundle.images.push_back(render<float>(gt, cam, cfg).color);

    // Initial sparse points: noisy 25% subset of the true centers (SfM stand-in).
    const int n_init = std::max(1, n_gaussians / 4);
    std::vector<int> idx(n_gaussians);
    for (int i = 0; i < n_gaussians; ++i) idx[i] = i;
    for (int r = 0; r < n_init; ++r) {
        std::uniform_int_distribution<int> pick(r, n_gaussians - 1);
        std::swap(idx[r], idx[pick(rng)]);
    }
    for (int r = 0; r < n_init; ++r) {
        const int i = idx[r];
        scene.bundle.init_points.push_back(
            gt.centers[i] + 0.05f * Vec3f(gauss(rng), gauss(rng), gauss(rng)));
        Vec3f rgb = sh_dc_to_color(Vec3f(gt.sh_at(i)[0], gt.sh_at(i)[1], gt.sh_at(i)[2]));
        for (int c = 0; c < 3; ++c) rgb[c] = std::min(1.f, std::max(0.f, rgb[c]));
        scene.bundle.init_colors.push_back(rgb);
    }
    scene.bundle.reference_points = gt.centers;
    return scene;
}

uint64_t scene_checksum(const SyntheticScene& scene) {
    uint64_t h = 1469598103934665603ull;  // FNV offset basis
    const GaussianSet& gt = scene.ground_truth;
    hash_value(h, gt.size());
    for (int i = 0; i < gt.size(); ++i) {
        hash_bytes(h, gt.centers[i].data(), 3 * sizeof(float));
        hash_bytes(h, gt.log_scales[i].data(), 3 * sizeof(float));
        hash_bytes(h, gt.rotations[i].data(), 4 * sizeof(float));
        hash_value(h, gt.opacity_logits[i]);
        hash_bytes(h, gt.sh_at(i), kShValueCount * sizeof(float));
    }
    for (const auto& cam : scene.bundle.cameras) {
        hash_value(h, cam.width);
        hash_value(h, cam.height);
        hash_value(h, cam.fx);
        hash_value(h, cam.fy);
        hash_value(h, cam.cx);
        hash_value(h, cam.cy);
        hash_bytes(h, cam.rotation.data(), 9 * sizeof(float));
        hash_bytes(h, cam.translation.data(), 3 * sizeof(float));
    }
    for (const auto& p : scene.bundle.init_points) hash_bytes(h, p.data(), 3 * sizeof(float));
    for (const auto& p : scene.bundle.reference_points)
        hash_bytes(h, p.data(), 3 * sizeof(float));
    return h;
}

}  // namespace splat
