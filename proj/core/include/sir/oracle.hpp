// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "sir/geometry.hpp"
#include "sir/image.hpp"
#include "sir/model_io.hpp"

namespace sir {

/// Parameters of the synthetic aerial scene: a textured height field built
/// from seeded value noise, fully deterministic given the spec.
struct SceneSpec {
    std::uint64_t seed = 1;
    double extent = 20.0;           // ground square side, scene units, centered at origin
    double height_amplitude = 1.0;  // terrain in [-amplitude, amplitude]
    int texture_octaves = 4;        // albedo octave count (>= 1)
};

/// Immutable synthetic scene. Height and albedo are pure functions of (x, y)
/// defined on the whole plane; rays are only intersected inside the extent.
class Scene {
  public:
    explicit Scene(const SceneSpec& spec);

    const SceneSpec& spec() const { return spec_; }
    double height(double x, double y) const;
    Eigen::Vector3d albedo(double x, double y) const;
    /// Shaded surface color in [0,1], Lambertian with a fixed light.
    Eigen::Vector3d surface_color(double x, double y) const;
    bool inside_extent(double x, double y) const;

  private:
    SceneSpec spec_;
    double height_base_wavelength_;
    double texture_base_wavelength_;
};

/// One rendered view with exact per-pixel depth; depth <= 0 marks a miss.
/// Color stays in 64-bit floats; quantization happens only in quantized().
struct GroundTruthView {
    int width = 0;
    int height = 0;
    Camera camera;
    std::vector<double> color;  // rgb interleaved, [0,1]
    std::vector<double> depth;  // camera-frame z of the hit, <= 0 on miss

    double depth_at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
    ImageU8 quantized() const;
    DepthMap to_depth_map(int view_id = -1) const;
};

Scene generate_scene(const SceneSpec& spec);

/// Ray-casts the height field: marched at a quarter of the height field's
/// minimum wavelength, then bisected until the hit is within 1e-6 scene
/// units. Misses (rays that never cross the surface inside the extent) are
/// invalid pixels.
GroundTruthView render_view(const Scene& scene, const Camera& camera);

/// Nadir-looking cameras on a regular grid above the extent, sized so
/// adjacent footprints overlap by overlap_fraction in [0,1). The principal
/// point is exactly (width/2, height/2).
std::vector<Camera> make_aerial_cameras(const Scene& scene, int rows, int cols, double altitude,
                                        double overlap_fraction, int image_width,
                                        int image_height, double k1 = 0.0, double k2 = 0.0);

}  // namespace sir
