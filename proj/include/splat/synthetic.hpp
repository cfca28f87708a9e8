#pragma once

#include <cstdint>

#include "splat/gaussian_set.hpp"
#include "splat/rasterizer.hpp"
#include "splat/scene_io.hpp"

namespace splat {

struct SyntheticScene {
    SceneBundle bundle;
    GaussianSet ground_truth;
};

/// Deterministic toy benchmark: random ground-truth Gaussians inside a unit
/// box, cameras on a radius-3 sphere looking at the origin, target images
/// rendered with this library's rasterizer, initial sparse points = a noisy
/// 25% subset of the true centers, reference points = the true centers.
SyntheticScene generate_synthetic(uint64_t seed, int n_gaussians, int n_views, int resolution,
                                  const RasterConfig& cfg = RasterConfig());

/// FNV-1a over the ground-truth parameters, camera poses and initial points
/// (not the rendered images). Pins the shipped benchmark's identity.
uint64_t scene_checksum(const SyntheticScene& scene);

}  // namespace splat
