// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <optional>

#include "sir/errors.hpp"

namespace sir {

/// Points at camera-frame depth below this are treated as behind the camera.
inline constexpr double kBehindEpsilon = 1e-9;

/// Distortion inversion: fixed-point iteration tolerance and iteration cap.
inline constexpr double kUndistortTol = 1e-10;
inline constexpr int kUndistortMaxIter = 50;

/// Continuous pixel position. Origin is the top-left corner of the image;
/// the center of integer pixel (x, y) is at (x + 0.5, y + 0.5). Values are
/// not clamped to the image bounds.
struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

/// Pinhole intrinsics with a two-coefficient radial distortion acting on
/// normalized camera coordinates. The principal point may be negative; that
/// is what makes recaptured sub-image cameras possible.
struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
};

/// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
struct Extrinsics {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Extrinsics() = default;

    Extrinsics(const Eigen::Matrix3d& rot, const Eigen::Vector3d& trans)
        : rotation(rot), translation(trans) {
        const Eigen::Matrix3d gram = rotation.transpose() * rotation;
        if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-12)
            throw InvalidArgument("rotation is not orthonormal");
        if (std::abs(rotation.determinant() - 1.0) > 1e-12)
            throw InvalidArgument("rotation determinant is not +1");
    }

    static Extrinsics from_quaternion(double qw, double qx, double qy, double qz,
                                      const Eigen::Vector3d& trans) {
        Eigen::Quaterniond q(qw, qx, qy, qz);
        const double n = q.norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw InvalidArgument("quaternion has zero or non-finite norm");
        q.normalize();
        return Extrinsics(q.toRotationMatrix(), trans);
    }

    /// Camera center in world coordinates.
    Eigen::Vector3d camera_center() const { return -(rotation.transpose() * translation); }
};

struct Camera {
    Intrinsics intrinsics;
    Extrinsics extrinsics;
    int width = 0;
    int height = 0;
};

inline void validate_camera(const Camera& cam) {
    if (cam.width < 1 || cam.height < 1)
        throw InvalidArgument("camera pixel dimensions must be positive");
    if (!(cam.intrinsics.fx > 0.0) || !(cam.intrinsics.fy > 0.0))
        throw InvalidArgument("focal lengths must be positive");
    if (!std::isfinite(cam.intrinsics.k1) || !std::isfinite(cam.intrinsics.k2))
        throw InvalidArgument("distortion coefficients must be finite");
}

/// Applies the radial model x_d = x * (1 + k1*r^2 + k2*r^4) in normalized
/// camera coordinates. Pure; the origin is a fixed point for any k1, k2.
inline Eigen::Vector2d distort_normalized(const Intrinsics& intr, const Eigen::Vector2d& xy) {
    const double r2 = xy.squaredNorm();
    const double scale = 1.0 + r2 * (intr.k1 + r2 * intr.k2);
    return xy * scale;
}

/// Inverts distort_normalized by fixed-point iteration started at the input.
/// Returns nullopt when the iteration cannot reach kUndistortTol, which
/// signals an input outside the model's injective domain.
inline std::optional<Eigen::Vector2d> undistort_normalized(const Intrinsics& intr,
                                                           const Eigen::Vector2d& distorted) {
    if (intr.k1 == 0.0 && intr.k2 == 0.0) return distorted;
    Eigen::Vector2d xy = distorted;
    for (int iter = 0; iter < kUndistortMaxIter; ++iter) {
        const double r2 = xy.squaredNorm();
        const double scale = 1.0 + r2 * (intr.k1 + r2 * intr.k2);
        if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
        xy = distorted / scale;
        if ((distort_normalized(intr, xy) - distorted).cwiseAbs().maxCoeff() < kUndistortTol)
            return xy;
    }
    return std::nullopt;
}

/// Camera-frame depth (z) of a world point.
inline double camera_depth(const Camera& cam, const Eigen::Vector3d& world) {
    return (cam.extrinsics.rotation.row(2) * world)(0) + cam.extrinsics.translation.z();
}

/// Projects a world point. Returns nullopt when the point is at or behind the
/// camera plane. The result may lie outside [0,width)x[0,height); callers
/// bound-check.
inline std::optional<PixelCoord> project(const Camera& cam, const Eigen::Vector3d& world) {
    const Eigen::Vector3d pc = cam.extrinsics.rotation * world + cam.extrinsics.translation;
    if (pc.z() <= kBehindEpsilon) return std::nullopt;
    const Eigen::Vector2d xd =
        distort_normalized(cam.intrinsics, Eigen::Vector2d(pc.x() / pc.z(), pc.y() / pc.z()));
    return PixelCoord{cam.intrinsics.fx * xd.x() + cam.intrinsics.cx,
                      cam.intrinsics.fy * xd.y() + cam.intrinsics.cy};
}

/// Inverts project for a given depth (camera-frame z, must be positive).
/// Returns nullopt when distortion inversion fails.
inline std::optional<Eigen::Vector3d> unproject(const Camera& cam, const PixelCoord& pixel,
                                                double depth) {
    const Eigen::Vector2d xd((pixel.u - cam.intrinsics.cx) / cam.intrinsics.fx,
                             (pixel.v - cam.intrinsics.cy) / cam.intrinsics.fy);
    const auto xn = undistort_normalized(cam.intrinsics, xd);
    if (!xn) return std::nullopt;
    const Eigen::Vector3d pc(xn->x() * depth, xn->y() * depth, depth);
    return cam.extrinsics.rotation.transpose() * (pc - cam.extrinsics.translation);
}

/// True when the continuous position lies inside [0,width)x[0,height).
inline bool in_bounds(const PixelCoord& px, int width, int height) {
    return px.u >= 0.0 && px.u < static_cast<double>(width) && px.v >= 0.0 &&
           px.v < static_cast<double>(height);
}

}  // namespace sir
