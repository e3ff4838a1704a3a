// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sir/clustering.hpp"
#include "sir/memory_budget.hpp"
#include "sir/model_io.hpp"
#include "sir/mvs.hpp"
#include "sir/oracle.hpp"
#include "sir/recapture.hpp"

namespace sir {

enum class ReconstructMode { Sir, Downsample, Native };

ReconstructMode parse_mode(const std::string& name);
std::string mode_name(ReconstructMode mode);

/// Synthetic fixture generation parameters (the `oracle` config block).
struct OracleConfig {
    int rows = 2;
    int cols = 3;
    double altitude = 12.0;
    double overlap = 0.6;
    int image_width = 640;
    int image_height = 480;
    double extent = 20.0;
    double height_amplitude = 0.8;
    int texture_octaves = 6;
    double k1 = 0.0;
    double k2 = 0.0;
    int proxy_grid = 40;
};

/// Analytic memory planning dimensions (the `bench` config block).
struct BenchConfig {
    int image_width = 10300;
    int image_height = 7700;
    int channels = 3;
    int bytes_per_sample = 4;
    int sources = 19;
};

/// Everything a run needs. JSON config files carry the same keys; CLI flags
/// override file values; SIR_WORKERS overrides the worker count.
struct RunConfig {
    std::filesystem::path model_dir;
    std::filesystem::path image_dir;
    std::filesystem::path output_dir;
    std::filesystem::path gt_dir;
    GridSpec grid{5, 5};
    int max_image_size = 2304;
    int cluster_size = 20;
    int max_sources = 8;
    SweepParams sweep{};
    FuseParams fuse{};
    int workers = 0;  // <= 0 means hardware concurrency
    std::uint64_t seed = 42;
    OracleConfig oracle{};
    BenchConfig bench{};
};

RunConfig load_run_config(const std::filesystem::path& path);
/// Worker count for this run: config value, then SIR_WORKERS, then hardware.
int resolve_workers(const RunConfig& config);

/// Writes images, exact ground-truth depths, and a sparse model with exact
/// poses under output_dir (images/, gt_depth/, sparse/, scene_spec.json).
/// Deterministic from the seed.
void cmd_oracle_gen(const RunConfig& config);

/// Splits every native image along the grid and writes the recaptured model:
/// output_dir/{images,sparse}, plus a tiles.txt manifest mapping every
/// sub-view to its parent and pixel rectangle. Inputs are not modified.
void cmd_recapture(const RunConfig& config);

/// Builds the overlap graph from the model's sparse points and writes
/// output_dir/clusters.txt.
std::vector<Cluster> cmd_cluster(const RunConfig& config);

struct ClusterMemory {
    int cluster_id = 0;
    std::uint64_t budget_bytes = 0;  // all images the cluster may hold
    std::uint64_t peak_bytes = 0;    // instrumented resident peak
};

struct EvaluateResult {
    struct PerView {
        int view_id = 0;
        std::string name;
        std::size_t gt_valid = 0;
        std::size_t est_valid = 0;
        std::size_t compared = 0;
        std::optional<double> median_abs_err;
        double completeness = 0.0;
    };
    std::vector<PerView> views;
    std::optional<double> pooled_median_abs_err;
    double mean_completeness = 0.0;
    std::optional<double> cloud_median_dist;
    std::size_t cloud_points = 0;
};

struct ReconstructSummary {
    ReconstructMode mode = ReconstructMode::Native;
    std::vector<ClusterMemory> cluster_memory;
    std::uint64_t peak_resident_bytes = 0;   // max over clusters
    std::uint64_t budget_bytes = 0;          // max cluster budget
    std::uint64_t total_image_bytes = 0;     // all working images together
    std::uint64_t gather_misses = 0;
    MemoryReport analytic_grid;              // estimate at the configured grid
    MemoryReport analytic_full;              // estimate at 1x1
    std::optional<EvaluateResult> metrics;   // present when gt_dir is set
};

/// Full run: prepare the working model for the mode (recapture / decimate /
/// as-is), cluster, sweep depth per (cluster, reference), filter, fuse, and
/// report. Stages communicate only through files under output_dir:
/// model/, images (mode dependent), clusters.txt, depth/, depth_filtered/,
/// fused.ply, run_meta.json, memory_report.json, metrics.json.
ReconstructSummary cmd_reconstruct(const RunConfig& config, ReconstructMode mode);

/// Depth stage only: model_dir + image_dir + output_dir/clusters.txt must
/// exist; writes SIRD maps under output_dir/depth.
void cmd_depth(const RunConfig& config);

/// Filter + fusion stage only: reads output_dir/depth, writes
/// depth_filtered/ and fused.ply.
void cmd_fuse(const RunConfig& config);

/// Compares a run's depth maps and cloud against ground truth re-rendered
/// from gt_dir/scene_spec.json; writes output_dir/metrics.json.
EvaluateResult cmd_evaluate(const RunConfig& config);

/// Analytic memory table for the configured bench dimensions at 1x1 and at
/// the configured grid; also returns the grid report.
MemoryReport cmd_bench(const RunConfig& config, std::ostream& out);

/// Serializes metrics for reports and tests.
std::string metrics_to_json(const EvaluateResult& result);

}  // namespace sir
