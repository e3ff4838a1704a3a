// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include "sir/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace sir {

namespace {

constexpr int kHeightOctaves = 3;
constexpr double kBisectDepthTol = 1e-6;

// 64-bit finalizer mix; the only randomness source in the scene so that
// fixtures reproduce bit-for-bit everywhere.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed, std::uint64_t salt) {
    const std::uint64_t hx = static_cast<std::uint64_t>(ix) * 0x9e3779b185ebca87ull;
    const std::uint64_t hy = static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4full;
    const std::uint64_t h = mix64(hx ^ (hy + 0x165667b19e3779f9ull) ^ mix64(seed ^ salt));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(double x, double y, std::uint64_t seed, std::uint64_t salt) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double tx = fade(x - fx);
    const double ty = fade(y - fy);
    const double v00 = lattice(ix, iy, seed, salt);
    const double v10 = lattice(ix + 1, iy, seed, salt);
    const double v01 = lattice(ix, iy + 1, seed, salt);
    const double v11 = lattice(ix + 1, iy + 1, seed, salt);
    const double a = v00 + (v10 - v00) * tx;
    const double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

// Octave sum in [0,1]; wavelength halves and amplitude halves per octave.
double fbm(double x, double y, std::uint64_t seed, std::uint64_t salt, int octaves,
           double base_wavelength) {
    double sum = 0.0;
    double amp = 1.0;
    double norm = 0.0;
    double freq = 1.0 / base_wavelength;
    for (int o = 0; o < octaves; ++o) {
        sum += amp * value_noise(x * freq, y * freq, seed, salt + static_cast<std::uint64_t>(o));
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return sum / norm;
}

}  // namespace

Scene::Scene(const SceneSpec& spec) : spec_(spec) {
    if (!(spec.extent > 0.0)) throw InvalidArgument("scene extent must be positive");
    if (spec.height_amplitude < 0.0) throw InvalidArgument("height amplitude must be >= 0");
    if (spec.texture_octaves < 1) throw InvalidArgument("texture octaves must be >= 1");
    height_base_wavelength_ = spec.extent / 4.0;
    texture_base_wavelength_ = spec.extent / 8.0;
}

Scene generate_scene(const SceneSpec& spec) { return Scene(spec); }

double Scene::height(double x, double y) const {
    if (spec_.height_amplitude == 0.0) return 0.0;
    const double v = fbm(x, y, spec_.seed, 0x48u, kHeightOctaves, height_base_wavelength_);
    return spec_.height_amplitude * (2.0 * v - 1.0);
}

Eigen::Vector3d Scene::albedo(double x, double y) const {
    Eigen::Vector3d a;
    for (int c = 0; c < 3; ++c) {
        const double v = fbm(x, y, spec_.seed, 0xA1u + 0x11u * static_cast<std::uint64_t>(c),
                             spec_.texture_octaves, texture_base_wavelength_);
        a[c] = 0.15 + 0.70 * v;
    }
    return a;
}

Eigen::Vector3d Scene::surface_color(double x, double y) const {
    static const Eigen::Vector3d light = Eigen::Vector3d(0.35, 0.20, 0.91).normalized();
    const double delta = spec_.extent / 512.0;
    const double dhx = (height(x + delta, y) - height(x - delta, y)) / (2.0 * delta);
    const double dhy = (height(x, y + delta) - height(x, y - delta)) / (2.0 * delta);
    const Eigen::Vector3d normal = Eigen::Vector3d(-dhx, -dhy, 1.0).normalized();
    const double shade = 0.35 + 0.65 * std::max(0.0, normal.dot(light));
    return albedo(x, y) * shade;
}

bool Scene::inside_extent(double x, double y) const {
    const double half = spec_.extent / 2.0;
    return x >= -half && x <= half && y >= -half && y <= half;
}

ImageU8 GroundTruthView::quantized() const {
    ImageU8 img = ImageU8::make(width, height, 3);
    for (std::size_t i = 0; i < color.size(); ++i) {
        const double v = std::clamp(color[i], 0.0, 1.0);
        img.data[i] = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
    }
    return img;
}

DepthMap GroundTruthView::to_depth_map(int view_id) const {
    DepthMap d = DepthMap::make(width, height);
    d.view_id = view_id;
    for (std::size_t i = 0; i < depth.size(); ++i)
        d.depth[i] = depth[i] > 0.0 ? static_cast<float>(depth[i]) : 0.0f;
    return d;
}

GroundTruthView render_view(const Scene& scene, const Camera& camera) {
    validate_camera(camera);
    GroundTruthView view;
    view.width = camera.width;
    view.height = camera.height;
    view.camera = camera;
    view.color.assign(static_cast<std::size_t>(camera.width) * camera.height * 3, 0.0);
    view.depth.assign(static_cast<std::size_t>(camera.width) * camera.height, 0.0);

    const Eigen::Matrix3d rot_t = camera.extrinsics.rotation.transpose();
    const Eigen::Vector3d center = camera.extrinsics.camera_center();
    const double amp = scene.spec().height_amplitude;
    const double slab_top = amp + 1e-6;
    const double slab_bottom = -amp - 1e-6;
    // A quarter of the height field's minimum wavelength so thin ridges are
    // never stepped over before bisection.
    const double min_wavelength =
        (scene.spec().extent / 4.0) / static_cast<double>(1 << (kHeightOctaves - 1));
    const double step = std::max(min_wavelength / 4.0, 1e-6);

    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            const PixelCoord px{x + 0.5, y + 0.5};
            const Eigen::Vector2d xd((px.u - camera.intrinsics.cx) / camera.intrinsics.fx,
                                     (px.v - camera.intrinsics.cy) / camera.intrinsics.fy);
            const auto xn = undistort_normalized(camera.intrinsics, xd);
            if (!xn) continue;
            // Parameterized so that t equals the camera-frame depth of the
            // sample point; the recorded ground-truth depth is t itself.
            const Eigen::Vector3d dir = rot_t * Eigen::Vector3d(xn->x(), xn->y(), 1.0);
            if (dir.z() >= -1e-12) continue;  // never descends into the slab

            double t_enter = (slab_top - center.z()) / dir.z();
            const double t_exit = (slab_bottom - center.z()) / dir.z();
            if (t_exit <= 0.0) continue;
            t_enter = std::max(t_enter, kBehindEpsilon * 2.0);

            auto above = [&](double t) {
                const Eigen::Vector3d p = center + t * dir;
                return p.z() - scene.height(p.x(), p.y());
            };
            if (above(t_enter) <= 0.0) continue;  // camera inside terrain

            double lo = t_enter;
            double hi = 0.0;
            bool hit = false;
            for (double t = t_enter + step; t <= t_exit + step; t += step) {
                const double tc = std::min(t, t_exit);
                if (above(tc) <= 0.0) {
                    hi = tc;
                    hit = true;
                    break;
                }
                lo = tc;
            }
            if (!hit) continue;
            while (hi - lo > kBisectDepthTol) {
                const double mid = 0.5 * (lo + hi);
                if (above(mid) <= 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            const double t_hit = 0.5 * (lo + hi);
            const Eigen::Vector3d p = center + t_hit * dir;
            if (!scene.inside_extent(p.x(), p.y())) continue;

            const std::size_t idx = static_cast<std::size_t>(y) * camera.width + x;
            view.depth[idx] = t_hit;
            const Eigen::Vector3d c = scene.surface_color(p.x(), p.y());
            view.color[idx * 3 + 0] = c.x();
            view.color[idx * 3 + 1] = c.y();
            view.color[idx * 3 + 2] = c.z();
        }
    }
    return view;
}

std::vector<Camera> make_aerial_cameras(const Scene& scene, int rows, int cols, double altitude,
                                        double overlap_fraction, int image_width,
                                        int image_height, double k1, double k2) {
    if (rows < 1 || cols < 1) throw InvalidArgument("camera grid counts must be >= 1");
    if (!(altitude > 0.0)) throw InvalidArgument("altitude must be positive");
    if (overlap_fraction < 0.0 || overlap_fraction >= 1.0)
        throw InvalidArgument("overlap fraction must be in [0, 1)");
    if (image_width < 2 || image_height < 2)
        throw InvalidArgument("image dimensions must be >= 2");

    const double extent = scene.spec().extent;
    const double footprint_x = extent / (1.0 + (cols - 1) * (1.0 - overlap_fraction));
    const double fx = image_width * altitude / footprint_x;
    const double footprint_y = image_height * altitude / fx;
    const double spacing_x = footprint_x * (1.0 - overlap_fraction);
    const double spacing_y = footprint_y * (1.0 - overlap_fraction);

    // Nadir pose: camera x along world x, camera y along -y, camera z down.
    Eigen::Matrix3d rot;
    rot << 1, 0, 0, 0, -1, 0, 0, 0, -1;

    std::vector<Camera> cameras;
    cameras.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double cx_pos = (c - (cols - 1) / 2.0) * spacing_x;
            const double cy_pos = (r - (rows - 1) / 2.0) * spacing_y;
            const Eigen::Vector3d center(cx_pos, cy_pos, altitude);
            Camera cam;
            cam.width = image_width;
            cam.height = image_height;
            cam.intrinsics.fx = fx;
            cam.intrinsics.fy = fx;
            cam.intrinsics.cx = image_width / 2.0;
            cam.intrinsics.cy = image_height / 2.0;
            cam.intrinsics.k1 = k1;
            cam.intrinsics.k2 = k2;
            cam.extrinsics = Extrinsics(rot, -(rot * center));
            cameras.push_back(cam);
        }
    }
    return cameras;
}

}  // namespace sir
