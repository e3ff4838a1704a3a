// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sir/geometry.hpp"
#include "sir/image.hpp"
#include "sir/model_io.hpp"
#include "sir/mvs_params.hpp"

namespace sir {

/// The depth hypothesis set: uniform in inverse depth, with h_0 == min_depth
/// and h_{n-1} == max_depth exactly. Throws DegenerateRange unless
/// 0 < min_depth < max_depth.
std::vector<double> depth_hypotheses(double min_depth, double max_depth, int count);

/// One resident piece of a source view's pixel frame. origin is the tile's
/// offset inside that frame; a whole image is a single tile at the origin.
struct SourceTile {
    const Camera* camera = nullptr;
    const ImageF32* image = nullptr;
    int origin_x = 0;
    int origin_y = 0;
};

/// One logical stereo source. All tiles must agree on focal lengths,
/// distortion, extrinsics, and on the frame-level principal point
/// (tile cx + origin). Matching costs gather samples across tiles, so a
/// source split into sub-images scores exactly like the intact image.
struct SourceGroup {
    std::vector<SourceTile> tiles;
    int frame_width = 0;
    int frame_height = 0;
};

/// Wraps an intact image as its own group.
SourceGroup single_source(const Camera& camera, const ImageF32& image);

struct SweepStats {
    /// Window taps inside the source frame that no resident tile covered.
    std::uint64_t gather_misses = 0;
};

/// Plane-sweep stereo: for every reference pixel and hypothesis, the window
/// is warped into each source (unproject at the hypothesis depth, project
/// into the source) and scored with NCC; the cost is the mean of (1 - NCC)
/// over sources, summed in ascending order so the reduction does not depend
/// on source enumeration. Depth is the argmin hypothesis, ties toward the
/// nearer one. Pixels whose best NCC falls below cost_threshold, whose
/// window has near-zero variance, or that never see a source in bounds are
/// invalid.
DepthMap plane_sweep(const Camera& ref_camera, const ImageF32& ref_image,
                     const std::vector<SourceGroup>& sources, const SweepParams& params,
                     SweepStats* stats = nullptr);

/// Keeps a reference pixel when at least min_support - 1 neighbors agree:
/// the pixel's 3D point lands inside the neighbor with a valid depth there,
/// the relative depth difference is below depth_rel_tol, and the
/// forward-backward reprojection error is below reproj_tol.
DepthMap geometric_consistency_filter(const DepthMap& ref_depth, const Camera& ref_camera,
                                      const std::vector<const DepthMap*>& neighbor_depths,
                                      const std::vector<const Camera*>& neighbor_cameras,
                                      const FuseParams& params);

/// Inputs to fusion, processed in the given order.
struct FusionView {
    int view_id = -1;
    const Camera* camera = nullptr;
    const DepthMap* depth = nullptr;
};

/// Fetches a view's color image when fusion reaches that view, so at most
/// one image needs to be resident at a time. A null loader (or null result)
/// yields white points.
using FusionImageLoader = std::function<std::shared_ptr<const ImageU8>(int view_id)>;

/// Merges per-view depth maps into one cloud: every surviving pixel
/// unprojects to a candidate; candidates that reproject onto a point already
/// claimed by an earlier view (within the tolerances) merge into it,
/// averaging the position and incrementing support. Points with support
/// below min_support are dropped. Output order: claiming view, then pixel
/// index.
PointCloud fuse_depth_maps(const std::vector<FusionView>& views, const FuseParams& params,
                           const FusionImageLoader& load_image = {});

}  // namespace sir
