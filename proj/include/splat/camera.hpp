#pragma once

#include <cmath>
#include <stdexcept>

#include "splat/types.hpp"

namespace splat {

/// Pinhole camera: intrinsics in pixels, extrinsics world -> camera with
/// x right, y down, z forward.
template <typename T>
struct CameraT {
    int width = 0;
    int height = 0;
    T fx = 0, fy = 0;
    T cx = 0, cy = 0;
    Mat3<T> rotation = Mat3<T>::Identity();
    Vec3<T> translation = Vec3<T>::Zero();
    T znear = T(0.01);
    T zfar = T(100);

    Vec3<T> to_camera(const Vec3<T>& p_world) const { return rotation * p_world + translation; }

    Vec3<T> center() const { return -(rotation.transpose() * translation); }

    Vec2<T> project(const Vec3<T>& p_cam) const {
        return Vec2<T>(fx * p_cam[0] / p_cam[2] + cx, fy * p_cam[1] / p_cam[2] + cy);
    }

    /// Unit world-space direction through the center of pixel (px, py).
    Vec3<T> ray_direction(int px, int py) const {
        Vec3<T> d_cam((T(px) + T(0.5) - cx) / fx, (T(py) + T(0.5) - cy) / fy, T(1));
        d_cam.normalize();
        return rotation.transpose() * d_cam;
    }

    bool rotation_orthonormal(T tol = T(1e-6)) const {
        Mat3<T> err = rotation * rotation.transpose() - Mat3<T>::Identity();
        return err.cwiseAbs().maxCoeff() <= tol;
    }

    void validate() const {
        if (width < 1 || height < 1) throw std::invalid_argument("camera: degenerate image size");
        if (!(znear > T(0)) || !(zfar > znear))
            throw std::invalid_argument("camera: need 0 < znear < zfar");
        if (!rotation_orthonormal()) throw std::invalid_argument("camera: rotation not orthonormal");
    }

    /// Camera for 0.5x-resolution rendering: dimensions and intrinsics halved.
    CameraT half_resolution() const {
        CameraT c = *this;
        c.width = width / 2;
        c.height = height / 2;
        const T sx = T(c.width) / T(width);
        const T sy = T(c.height) / T(height);
        c.fx = fx * sx;
        c.fy = fy * sy;
        c.cx = cx * sx;
        c.cy = cy * sy;
        return c;
    }

    template <typename U>
    CameraT<U> cast() const {
        CameraT<U> c;
        c.width = width;
        c.height = height;
        c.fx = static_cast<U>(fx);
        c.fy = static_cast<U>(fy);
        c.cx = static_cast<U>(cx);
        c.cy = static_cast<U>(cy);
        c.rotation = rotation.template cast<U>();
        c.translation = translation.template cast<U>();
        c.znear = static_cast<U>(znear);
        c.zfar = static_cast<U>(zfar);
        return c;
    }
};

using Camera = CameraT<float>;

/// World->camera pose looking from `position` toward `target` (y down).
template <typename T>
void look_at(const Vec3<T>& position, const Vec3<T>& target, const Vec3<T>& world_up,
             Mat3<T>& rotation, Vec3<T>& translation) {
    Vec3<T> forward = (target - position).normalized();
    Vec3<T> right = forward.cross(world_up);
    if (right.norm() < T(1e-8)) right = forward.cross(Vec3<T>(1, 0, 0));
    right.normalize();
    Vec3<T> down = forward.cross(right).normalized();
    rotation.row(0) = right.transpose();
    rotation.row(1) = down.transpose();
    rotation.row(2) = forward.transpose();
    translation = -(rotation * position);
}

}  // namespace splat
