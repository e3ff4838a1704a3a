// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include "sir/image.hpp"

#include <algorithm>
#include <cmath>

namespace sir {

ImageU8 ImageU8::make(int width, int height, int channels, std::uint8_t fill) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3))
        throw InvalidArgument("image dimensions must be positive with 1 or 3 channels");
    ImageU8 img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.data.assign(static_cast<std::size_t>(width) * height * channels, fill);
    return img;
}

ImageF32 ImageF32::make(int width, int height, float fill) {
    if (width < 1 || height < 1) throw InvalidArgument("image dimensions must be positive");
    ImageF32 img;
    img.width = width;
    img.height = height;
    img.data.assign(static_cast<std::size_t>(width) * height, fill);
    return img;
}

ImageF32 luminance(const ImageU8& image) {
    ImageF32 out = ImageF32::make(image.width, image.height);
    const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
    if (image.channels == 1) {
        for (std::size_t i = 0; i < n; ++i)
            out.data[i] = static_cast<float>(image.data[i] / 255.0);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t* p = image.data.data() + i * 3;
            const double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
            out.data[i] = static_cast<float>(y / 255.0);
        }
    }
    return out;
}

ImageU8 resize_area(const ImageU8& image, int out_width, int out_height) {
    if (out_width < 1 || out_height < 1 || out_width > image.width || out_height > image.height)
        throw InvalidArgument("resize_area output must be positive and no larger than the input");
    if (out_width == image.width && out_height == image.height) return image;

    ImageU8 out = ImageU8::make(out_width, out_height, image.channels);
    const double sx = static_cast<double>(image.width) / out_width;
    const double sy = static_cast<double>(image.height) / out_height;
    std::vector<double> acc(image.channels);

    for (int oy = 0; oy < out_height; ++oy) {
        const double y0 = oy * sy;
        const double y1 = (oy + 1) * sy;
        const int iy0 = static_cast<int>(std::floor(y0));
        const int iy1 = std::min(image.height - 1, static_cast<int>(std::ceil(y1)) - 1);
        for (int ox = 0; ox < out_width; ++ox) {
            const double x0 = ox * sx;
            const double x1 = (ox + 1) * sx;
            const int ix0 = static_cast<int>(std::floor(x0));
            const int ix1 = std::min(image.width - 1, static_cast<int>(std::ceil(x1)) - 1);
            std::fill(acc.begin(), acc.end(), 0.0);
            double area = 0.0;
            for (int iy = iy0; iy <= iy1; ++iy) {
                const double hy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                for (int ix = ix0; ix <= ix1; ++ix) {
                    const double hx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                    const double w = hx * hy;
                    area += w;
                    for (int c = 0; c < image.channels; ++c)
                        acc[c] += w * image.at(ix, iy, c);
                }
            }
            for (int c = 0; c < image.channels; ++c) {
                const double v = acc[c] / area;
                out.at(ox, oy, c) = static_cast<std::uint8_t>(
                    std::clamp(std::floor(v + 0.5), 0.0, 255.0));
            }
        }
    }
    return out;
}

}  // namespace sir
