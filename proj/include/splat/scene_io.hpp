#pragma once

#include <string>
#include <vector>

#include "splat/camera.hpp"
#include "splat/types.hpp"

namespace splat {

/// Everything training needs from disk: posed cameras with target images,
/// initial sparse points with colors, and (optionally) reference points for
/// geometry metrics.
struct SceneBundle {
    std::vector<Camera> cameras;
    std::vector<Imagef> images;
    std::vector<Vec3f> init_points;
    std::vector<Vec3f> init_colors;
    std::vector<Vec3f> reference_points;  // empty when the scene has none
};

/// Loads a scene directory: a manifest.json naming cameras (intrinsics,
/// rotation quaternion, translation, image file) plus a points PLY and an
/// optional reference PLY. Throws with the camera id / file name on any
/// missing file, bad quaternion, or image/camera resolution mismatch.
SceneBundle load_scene(const std::string& dir);

/// Writes a bundle as a loadable scene directory. `image_ext` picks the
/// image format (pfm keeps targets lossless).
void save_scene(const std::string& dir, const SceneBundle& bundle,
                const std::string& image_ext = "pfm");

}  // namespace splat
