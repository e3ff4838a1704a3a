// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sir/geometry.hpp"
#include "sir/image.hpp"

namespace sir {

/// One posed image: which camera it uses, its file name, and its pose.
struct View {
    int camera_id = 0;
    std::string name;
    Extrinsics pose;
};

struct SparsePoint {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    std::array<std::uint8_t, 3> color = {0, 0, 0};
    std::vector<int> view_ids;
};

/// A sparse reconstruction: cameras (intrinsics + dimensions, pose ignored),
/// posed views referencing them, and optional sparse proxy points.
struct SceneModel {
    std::map<int, Camera> cameras;
    std::map<int, View> views;
    std::vector<SparsePoint> points;

    /// Camera of a view with the view's pose folded in.
    Camera view_camera(int view_id) const;
};

/// Per-pixel metric depth for one view; depth 0 marks an invalid pixel.
struct DepthMap {
    int view_id = -1;
    int width = 0;
    int height = 0;
    std::vector<float> depth;

    static DepthMap make(int width, int height);
    float at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return depth[static_cast<std::size_t>(y) * width + x]; }
    bool valid(int x, int y) const { return at(x, y) > 0.0f; }
    std::size_t valid_count() const;
};

struct PointCloud {
    struct Point {
        Eigen::Vector3d position = Eigen::Vector3d::Zero();
        std::array<std::uint8_t, 3> color = {0, 0, 0};
        int support = 1;
    };
    std::vector<Point> points;
};

/// Reads cameras.txt / images.txt / points3D.txt (text layout as written by
/// the usual sparse reconstruction tools). PINHOLE (fx fy cx cy) and RADIAL
/// (f cx cy k1 k2) camera kinds are supported; comment lines starting with #
/// are skipped; parsing is locale independent. points3D.txt is optional.
SceneModel read_sparse_model(const std::filesystem::path& directory);

/// Inverse of read_sparse_model; floats are written with 17 significant
/// digits so the round-trip is exact. Cameras with distortion require
/// fx == fy (the RADIAL kind); others are written as PINHOLE.
void write_sparse_model(const SceneModel& model, const std::filesystem::path& directory);

/// Binary portable pixmaps, 8-bit only: P5 (gray) and P6 (RGB), maxval 255.
ImageU8 read_image(const std::filesystem::path& path);
void write_image(const ImageU8& image, const std::filesystem::path& path);

/// Depth map container: magic "SIRD", little-endian u32 width and height,
/// then row-major f32 depths with 0 marking invalid pixels.
DepthMap read_depth_map(const std::filesystem::path& path);
void write_depth_map(const DepthMap& depth, const std::filesystem::path& path);

/// ASCII PLY with x y z as double and red green blue as uchar, one vertex
/// per point, in the cloud's order.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// Reads the PLY subset written by write_point_cloud ( support counts are
/// not stored and come back as 1).
PointCloud read_point_cloud(const std::filesystem::path& path);

/// Shortest text form of a double that parses back to the same value.
std::string format_double(double value);

}  // namespace sir
