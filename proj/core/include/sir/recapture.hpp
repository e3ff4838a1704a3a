// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sir/geometry.hpp"
#include "sir/image.hpp"

namespace sir {

/// Sub-image grid layout: `cols` tiles across (index i), `rows` tiles down
/// (index j).
struct GridSpec {
    int cols = 1;
    int rows = 1;
};

/// Identity of one sub-image: which native image it came from, its grid
/// position (absent for free-form regions), and its pixel rectangle in the
/// native frame.
struct SubImageRef {
    std::string parent_id;
    std::optional<int> i;
    std::optional<int> j;
    int origin_x = 0;
    int origin_y = 0;
    int width = 0;
    int height = 0;
};

/// A native camera together with the cameras synthesized for its sub-images.
/// `cameras[k]` belongs to `refs[k]`; extrinsics, focal lengths, and
/// distortion are copied verbatim from the native camera, only the principal
/// point differs.
struct RecaptureSet {
    Camera native_camera;
    std::vector<SubImageRef> refs;
    std::vector<Camera> cameras;
};

/// First native column of grid tile i: all tiles span floor(width/cols)
/// columns except the last, which absorbs the remainder. Same for rows.
inline int tile_begin(int native, int count, int index) {
    return index * (native / count);
}
inline int tile_end(int native, int count, int index) {
    return index + 1 == count ? native : (index + 1) * (native / count);
}

/// Canonical sub-image id string.
inline std::string sub_image_id(std::string_view parent_id, int i, int j) {
    return std::string(parent_id) + "_s" + std::to_string(i) + "_" + std::to_string(j);
}

/// Synthesizes the camera that recaptures an arbitrary rectangular region of
/// the native image: the principal point moves to (cx - origin_x,
/// cy - origin_y), everything else is copied. Throws OutOfBounds when the
/// region does not fit inside the native image.
std::pair<SubImageRef, Camera> recapture_region(const Camera& camera, int origin_x, int origin_y,
                                                int width, int height,
                                                std::string parent_id = {});

/// Recaptures the full grid in row-major order (j outer, i inner). The tiles
/// partition the native image exactly. Throws OutOfBounds when the grid has
/// more tiles than pixels along an axis.
RecaptureSet recapture_grid(const Camera& camera, const GridSpec& grid,
                            std::string parent_id = {});

/// Splits pixel data along the same grid; each tile is a bit-exact copy of
/// its region. Throws DimensionMismatch when the buffer does not match the
/// grid's native dimensions (i.e. grid larger than the image).
std::vector<std::pair<SubImageRef, ImageU8>> split_image(const ImageU8& pixels,
                                                         const GridSpec& grid,
                                                         std::string parent_id = {});

/// Translates a sub-image position into the native frame. Pure translation;
/// the input need not lie inside the sub-image.
inline PixelCoord map_sub_to_native(const SubImageRef& ref, const PixelCoord& pixel) {
    return PixelCoord{pixel.u + ref.origin_x, pixel.v + ref.origin_y};
}

/// Inverse of map_sub_to_native.
inline PixelCoord map_native_to_sub(const SubImageRef& ref, const PixelCoord& pixel) {
    return PixelCoord{pixel.u - ref.origin_x, pixel.v - ref.origin_y};
}

}  // namespace sir
