// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sir/errors.hpp"

namespace sir {

/// Interleaved 8-bit image, 1 (gray) or 3 (RGB) channels.
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    static ImageU8 make(int width, int height, int channels, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t byte_size() const { return data.size(); }
};

/// Single-channel float image used by the matching cost computations.
struct ImageF32 {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    static ImageF32 make(int width, int height, float fill = 0.0f);

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    const float* row(int y) const { return data.data() + static_cast<std::size_t>(y) * width; }
};

/// Rec.601 luma in [0,1]. Gray inputs are scaled by 1/255.
ImageF32 luminance(const ImageU8& image);

/// Area-average resize; exact box integration, deterministic. Used by the
/// decimation baseline. Output dimensions must be positive and no larger
/// than the input.
ImageU8 resize_area(const ImageU8& image, int out_width, int out_height);

}  // namespace sir
