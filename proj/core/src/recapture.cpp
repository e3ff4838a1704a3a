// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include "sir/recapture.hpp"

#include <cstring>

namespace sir {

std::pair<SubImageRef, Camera> recapture_region(const Camera& camera, int origin_x, int origin_y,
                                                int width, int height, std::string parent_id) {
    if (width < 1 || height < 1) throw InvalidArgument("region size components must be >= 1");
    if (origin_x < 0 || origin_y < 0 || origin_x + width > camera.width ||
        origin_y + height > camera.height)
        throw OutOfBounds("recapture region exceeds the native image");

    SubImageRef ref;
    ref.parent_id = std::move(parent_id);
    ref.origin_x = origin_x;
    ref.origin_y = origin_y;
    ref.width = width;
    ref.height = height;

    Camera sub = camera;
    sub.intrinsics.cx = camera.intrinsics.cx - origin_x;
    sub.intrinsics.cy = camera.intrinsics.cy - origin_y;
    sub.width = width;
    sub.height = height;
    return {std::move(ref), sub};
}

RecaptureSet recapture_grid(const Camera& camera, const GridSpec& grid, std::string parent_id) {
    if (grid.cols < 1 || grid.rows < 1) throw InvalidArgument("grid counts must be >= 1");
    if (grid.cols > camera.width || grid.rows > camera.height)
        throw OutOfBounds("more sub-images than pixels along an axis");

    RecaptureSet set;
    set.native_camera = camera;
    set.refs.reserve(static_cast<std::size_t>(grid.cols) * grid.rows);
    set.cameras.reserve(set.refs.capacity());
    for (int j = 0; j < grid.rows; ++j) {
        const int y0 = tile_begin(camera.height, grid.rows, j);
        const int y1 = tile_end(camera.height, grid.rows, j);
        for (int i = 0; i < grid.cols; ++i) {
            const int x0 = tile_begin(camera.width, grid.cols, i);
            const int x1 = tile_end(camera.width, grid.cols, i);
            auto [ref, sub] = recapture_region(camera, x0, y0, x1 - x0, y1 - y0, parent_id);
            ref.i = i;
            ref.j = j;
            set.refs.push_back(std::move(ref));
            set.cameras.push_back(sub);
        }
    }
    return set;
}

std::vector<std::pair<SubImageRef, ImageU8>> split_image(const ImageU8& pixels,
                                                         const GridSpec& grid,
                                                         std::string parent_id) {
    if (grid.cols < 1 || grid.rows < 1) throw InvalidArgument("grid counts must be >= 1");
    if (grid.cols > pixels.width || grid.rows > pixels.height)
        throw DimensionMismatch("grid has more tiles than pixels along an axis");

    std::vector<std::pair<SubImageRef, ImageU8>> out;
    out.reserve(static_cast<std::size_t>(grid.cols) * grid.rows);
    const int ch = pixels.channels;
    for (int j = 0; j < grid.rows; ++j) {
        const int y0 = tile_begin(pixels.height, grid.rows, j);
        const int y1 = tile_end(pixels.height, grid.rows, j);
        for (int i = 0; i < grid.cols; ++i) {
            const int x0 = tile_begin(pixels.width, grid.cols, i);
            const int x1 = tile_end(pixels.width, grid.cols, i);
            SubImageRef ref;
            ref.parent_id = parent_id;
            ref.i = i;
            ref.j = j;
            ref.origin_x = x0;
            ref.origin_y = y0;
            ref.width = x1 - x0;
            ref.height = y1 - y0;

            ImageU8 tile = ImageU8::make(ref.width, ref.height, ch);
            const std::size_t row_bytes = static_cast<std::size_t>(ref.width) * ch;
            for (int y = y0; y < y1; ++y) {
                const std::uint8_t* src =
                    pixels.data.data() + (static_cast<std::size_t>(y) * pixels.width + x0) * ch;
                std::memcpy(tile.data.data() + static_cast<std::size_t>(y - y0) * row_bytes, src,
                            row_bytes);
            }
            out.emplace_back(std::move(ref), std::move(tile));
        }
    }
    return out;
}

}  // namespace sir
