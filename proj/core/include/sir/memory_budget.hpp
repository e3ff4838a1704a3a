// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sir/clustering.hpp"
#include "sir/mvs_params.hpp"
#include "sir/recapture.hpp"

namespace sir {

/// Analytic memory accounting for one stereo step. Covers image buffers,
/// the cost volume, and output buffers; algorithm-internal scratch is
/// deliberately excluded so the model stays backend independent.
struct MemoryReport {
    std::uint64_t native_image_bytes = 0;  // one full-resolution input image
    std::uint64_t tile_bytes = 0;          // one ceil-sized grid tile
    std::uint64_t image_buffer_bytes = 0;  // (1 + sources) resident tiles
    std::uint64_t cost_volume_bytes = 0;   // tile pixels x hypotheses x 4
    std::uint64_t output_buffer_bytes = 0; // f32 depth + u8 mask per tile pixel
    std::uint64_t peak_bytes = 0;
    int grid_cells = 1;
    std::size_t source_count = 0;
};

/// Exact byte product; throws OverflowError past 64 bits and
/// InvalidArgument when any factor is < 1.
std::uint64_t image_bytes(std::uint64_t width, std::uint64_t height, std::uint64_t channels,
                          std::uint64_t bytes_per_sample);

/// Planning-time peak for a stereo step with the given source count, on
/// tiles of a width x height image split by the grid. Tile dimensions use
/// the ceiling split so the estimate covers every regular tile.
MemoryReport estimate_cluster_peak(std::size_t source_count, int image_width, int image_height,
                                   int channels, int bytes_per_sample, const GridSpec& grid,
                                   const SweepParams& params);

/// Same with the source count taken from a cluster: every other resident
/// view (members and borrowed) may serve as a source.
MemoryReport estimate_cluster_peak(const Cluster& cluster, int image_width, int image_height,
                                   int channels, int bytes_per_sample, const GridSpec& grid,
                                   const SweepParams& params);

/// Aligned text table comparing labelled reports.
void print_report_table(const std::vector<std::pair<std::string, MemoryReport>>& reports,
                        std::ostream& out);

}  // namespace sir
