#pragma once

#include <string>
#include <vector>

#include "splat/gaussian_set.hpp"

namespace splat {

/// Binary little-endian PLY in the 3DGS interchange layout: one vertex
/// element with float properties x,y,z, nx,ny,nz (zeros), f_dc_0..2,
/// f_rest_0..44 (channel-major: 15 coefficients for R, then G, then B),
/// opacity (logit), scale_0..2 (log), rot_0..3 (quaternion w,x,y,z).
/// Round-trips are bit-exact. Parse errors report the offending byte offset.
void write_ply(const std::string& path, const GaussianSet& set);
GaussianSet read_ply(const std::string& path);

struct PointCloud {
    std::vector<Vec3f> points;
    std::vector<Vec3f> colors;  // unit range
};

/// MeshLab-loadable point cloud: x,y,z floats + red,green,blue uchar.
void write_points_ply(const std::string& path, const std::vector<Vec3f>& points,
                      const std::vector<Vec3f>& colors);
PointCloud read_points_ply(const std::string& path);

}  // namespace splat
