// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include "sir/memory_budget.hpp"

#include <iomanip>
#include <ostream>

#include "sir/errors.hpp"

namespace sir {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("byte count exceeds 64 bits");
    return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw OverflowError("byte count exceeds 64 bits");
    return r;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

std::uint64_t image_bytes(std::uint64_t width, std::uint64_t height, std::uint64_t channels,
                          std::uint64_t bytes_per_sample) {
    if (width < 1 || height < 1 || channels < 1 || bytes_per_sample < 1)
        throw InvalidArgument("image_bytes arguments must all be >= 1");
    return checked_mul(checked_mul(width, height), checked_mul(channels, bytes_per_sample));
}

MemoryReport estimate_cluster_peak(std::size_t source_count, int image_width, int image_height,
                                   int channels, int bytes_per_sample, const GridSpec& grid,
                                   const SweepParams& params) {
    if (image_width < 1 || image_height < 1)
        throw InvalidArgument("image dimensions must be positive");
    if (grid.cols < 1 || grid.rows < 1) throw InvalidArgument("grid counts must be >= 1");
    if (params.num_hypotheses < 2) throw InvalidArgument("num_hypotheses must be >= 2");

    const std::uint64_t tile_w = ceil_div(static_cast<std::uint64_t>(image_width),
                                          static_cast<std::uint64_t>(grid.cols));
    const std::uint64_t tile_h = ceil_div(static_cast<std::uint64_t>(image_height),
                                          static_cast<std::uint64_t>(grid.rows));
    const std::uint64_t tile_px = checked_mul(tile_w, tile_h);

    MemoryReport r;
    r.grid_cells = grid.cols * grid.rows;
    r.source_count = source_count;
    r.native_image_bytes = image_bytes(static_cast<std::uint64_t>(image_width),
                                       static_cast<std::uint64_t>(image_height),
                                       static_cast<std::uint64_t>(channels),
                                       static_cast<std::uint64_t>(bytes_per_sample));
    r.tile_bytes = checked_mul(tile_px, static_cast<std::uint64_t>(channels) *
                                            static_cast<std::uint64_t>(bytes_per_sample));
    r.image_buffer_bytes = checked_mul(1 + static_cast<std::uint64_t>(source_count), r.tile_bytes);
    r.cost_volume_bytes =
        checked_mul(tile_px, checked_mul(static_cast<std::uint64_t>(params.num_hypotheses), 4));
    r.output_buffer_bytes = checked_mul(tile_px, 5);  // f32 depth + u8 validity
    r.peak_bytes =
        checked_add(checked_add(r.image_buffer_bytes, r.cost_volume_bytes), r.output_buffer_bytes);
    return r;
}

MemoryReport estimate_cluster_peak(const Cluster& cluster, int image_width, int image_height,
                                   int channels, int bytes_per_sample, const GridSpec& grid,
                                   const SweepParams& params) {
    const std::size_t resident = cluster.members.size() + cluster.borrowed.size();
    const std::size_t sources = resident > 0 ? resident - 1 : 0;
    return estimate_cluster_peak(sources, image_width, image_height, channels, bytes_per_sample,
                                 grid, params);
}

void print_report_table(const std::vector<std::pair<std::string, MemoryReport>>& reports,
                        std::ostream& out) {
    const char* rows[] = {"native image",   "tile",        "image buffers",
                          "cost volume",    "outputs",     "peak"};
    auto field = [](const MemoryReport& r, int row) -> std::uint64_t {
        switch (row) {
            case 0: return r.native_image_bytes;
            case 1: return r.tile_bytes;
            case 2: return r.image_buffer_bytes;
            case 3: return r.cost_volume_bytes;
            case 4: return r.output_buffer_bytes;
            default: return r.peak_bytes;
        }
    };
    out << std::left << std::setw(16) << "bytes";
    for (const auto& [label, r] : reports) out << std::right << std::setw(18) << label;
    out << '\n';
    for (int row = 0; row < 6; ++row) {
        out << std::left << std::setw(16) << rows[row];
        for (const auto& [label, r] : reports)
            out << std::right << std::setw(18) << field(r, row);
        out << '\n';
    }
}

}  // namespace sir
