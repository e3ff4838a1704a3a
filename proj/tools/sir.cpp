// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0
//
// Command line for the sub-image recapture reconstruction pipeline.
//
//   sir oracle-gen   --output-dir fixture [--seed N ...]
//   sir recapture    --model-dir m --image-dir i --output-dir o --grid 5x5
//   sir cluster      --model-dir m --output-dir o
//   sir depth        --model-dir m --image-dir i --output-dir o
//   sir fuse         --model-dir m --image-dir i --output-dir o
//   sir reconstruct  --model-dir m --image-dir i --output-dir o --mode sir
//   sir evaluate     --output-dir run --gt-dir fixture
//   sir bench        [--grid 5x5 ...]
//
// Every subcommand accepts --config <json>; explicit flags override file
// values and SIR_WORKERS overrides the worker count. Exit codes: 0 success,
// 1 usage error, 2 data error.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sir/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string model_dir, image_dir, output_dir, gt_dir;
    std::string grid;
    std::string mode = "sir";
    int max_image_size = -1;
    int cluster_size = -1;
    int max_sources = -1;
    int num_hypotheses = -1;
    int window = -1;
    double cost_threshold = -1.0;
    double min_depth = -1.0;
    double max_depth = -1.0;
    int min_support = -1;
    double reproj_tol = -1.0;
    double depth_rel_tol = -1.0;
    int workers = -1;
    long long seed = -1;
    // oracle block
    int rows = -1, cols = -1;
    double altitude = -1.0, overlap = -1.0;
    int width = -1, height = -1;
    double extent = -1.0, amplitude = -1.0;
    int octaves = -1;
    double k1 = std::nan(""), k2 = std::nan("");
    int proxy_grid = -1;
};

sir::GridSpec parse_grid(const std::string& text) {
    const auto x = text.find_first_of("xX");
    if (x == std::string::npos || x == 0 || x + 1 >= text.size())
        throw CLI::ValidationError("--grid expects IxJ, e.g. 5x5");
    sir::GridSpec grid;
    grid.cols = std::stoi(text.substr(0, x));
    grid.rows = std::stoi(text.substr(x + 1));
    return grid;
}

sir::RunConfig build_config(const CliOptions& opt) {
    sir::RunConfig cfg;
    if (!opt.config_path.empty()) cfg = sir::load_run_config(opt.config_path);
    if (!opt.model_dir.empty()) cfg.model_dir = opt.model_dir;
    if (!opt.image_dir.empty()) cfg.image_dir = opt.image_dir;
    if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
    if (!opt.gt_dir.empty()) cfg.gt_dir = opt.gt_dir;
    if (!opt.grid.empty()) cfg.grid = parse_grid(opt.grid);
    if (opt.max_image_size >= 0) cfg.max_image_size = opt.max_image_size;
    if (opt.cluster_size >= 0) cfg.cluster_size = opt.cluster_size;
    if (opt.max_sources >= 0) cfg.max_sources = opt.max_sources;
    if (opt.num_hypotheses >= 0) cfg.sweep.num_hypotheses = opt.num_hypotheses;
    if (opt.window >= 0) cfg.sweep.window = opt.window;
    if (opt.cost_threshold >= 0) cfg.sweep.cost_threshold = opt.cost_threshold;
    if (opt.min_depth >= 0) cfg.sweep.min_depth = opt.min_depth;
    if (opt.max_depth >= 0) cfg.sweep.max_depth = opt.max_depth;
    if (opt.min_support >= 0) cfg.fuse.min_support = opt.min_support;
    if (opt.reproj_tol >= 0) cfg.fuse.reproj_tol = opt.reproj_tol;
    if (opt.depth_rel_tol >= 0) cfg.fuse.depth_rel_tol = opt.depth_rel_tol;
    if (opt.workers >= 0) cfg.workers = opt.workers;
    if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.rows >= 0) cfg.oracle.rows = opt.rows;
    if (opt.cols >= 0) cfg.oracle.cols = opt.cols;
    if (opt.altitude >= 0) cfg.oracle.altitude = opt.altitude;
    if (opt.overlap >= 0) cfg.oracle.overlap = opt.overlap;
    if (opt.width >= 0) cfg.oracle.image_width = opt.width;
    if (opt.height >= 0) cfg.oracle.image_height = opt.height;
    if (opt.extent >= 0) cfg.oracle.extent = opt.extent;
    if (opt.amplitude >= 0) cfg.oracle.height_amplitude = opt.amplitude;
    if (opt.octaves >= 0) cfg.oracle.texture_octaves = opt.octaves;
    if (!std::isnan(opt.k1)) cfg.oracle.k1 = opt.k1;
    if (!std::isnan(opt.k2)) cfg.oracle.k2 = opt.k2;
    if (opt.proxy_grid >= 0) cfg.oracle.proxy_grid = opt.proxy_grid;
    return cfg;
}

void add_common_options(CLI::App* app, CliOptions& opt) {
    app->add_option("--config", opt.config_path, "JSON config file; flags override its values");
    app->add_option("--model-dir", opt.model_dir, "sparse model directory (cameras/images/points3D.txt)");
    app->add_option("--image-dir", opt.image_dir, "directory holding the model's images");
    app->add_option("--output-dir", opt.output_dir, "output directory for this stage");
    app->add_option("--gt-dir", opt.gt_dir, "oracle fixture directory (enables evaluation)");
    app->add_option("--grid", opt.grid, "sub-image grid as IxJ (default 5x5)");
    app->add_option("--max-image-size", opt.max_image_size,
                    "decimation baseline: longest image side (default 2304)");
    app->add_option("--cluster-size", opt.cluster_size, "target views per cluster (default 20)");
    app->add_option("--max-sources", opt.max_sources, "stereo sources per reference (default 8)");
    app->add_option("--hypotheses", opt.num_hypotheses, "plane-sweep depth hypotheses (default 128)");
    app->add_option("--window", opt.window, "odd NCC window side (default 7)");
    app->add_option("--cost-threshold", opt.cost_threshold, "minimum best NCC (default 0.3)");
    app->add_option("--min-depth", opt.min_depth, "sweep range override, scene units");
    app->add_option("--max-depth", opt.max_depth, "sweep range override, scene units");
    app->add_option("--min-support", opt.min_support, "fusion: consistent views required (default 2)");
    app->add_option("--reproj-tol", opt.reproj_tol, "fusion: reprojection tolerance px (default 1.0)");
    app->add_option("--depth-rel-tol", opt.depth_rel_tol,
                    "fusion: relative depth tolerance (default 0.01)");
    app->add_option("--workers", opt.workers, "worker threads (0 = hardware, SIR_WORKERS overrides)");
    app->add_option("--seed", opt.seed, "oracle scene seed (default 42)");
}

void add_oracle_options(CLI::App* app, CliOptions& opt) {
    app->add_option("--rows", opt.rows, "camera grid rows (default 2)");
    app->add_option("--cols", opt.cols, "camera grid cols (default 3)");
    app->add_option("--altitude", opt.altitude, "camera altitude, scene units (default 12)");
    app->add_option("--overlap", opt.overlap, "adjacent footprint overlap in [0,1) (default 0.6)");
    app->add_option("--width", opt.width, "rendered image width (default 640)");
    app->add_option("--height", opt.height, "rendered image height (default 480)");
    app->add_option("--extent", opt.extent, "ground square side, scene units (default 20)");
    app->add_option("--amplitude", opt.amplitude, "terrain height amplitude (default 0.8)");
    app->add_option("--octaves", opt.octaves, "albedo texture octaves (default 6)");
    app->add_option("--k1", opt.k1, "radial distortion k1 for the oracle cameras");
    app->add_option("--k2", opt.k2, "radial distortion k2 for the oracle cameras");
    app->add_option("--proxy-grid", opt.proxy_grid, "sparse proxy grid side (default 40)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sub-image recapture: memory-bounded multi-view stereo"};
    app.require_subcommand(1);
    CliOptions opt;

    CLI::App* oracle = app.add_subcommand("oracle-gen", "generate a synthetic fixture");
    add_common_options(oracle, opt);
    add_oracle_options(oracle, opt);

    CLI::App* recapture = app.add_subcommand("recapture", "split images and synthesize cameras");
    add_common_options(recapture, opt);

    CLI::App* cluster = app.add_subcommand("cluster", "group overlapping views");
    add_common_options(cluster, opt);

    CLI::App* depth = app.add_subcommand("depth", "plane-sweep depth maps per cluster");
    add_common_options(depth, opt);

    CLI::App* fuse = app.add_subcommand("fuse", "filter depth maps and fuse the point cloud");
    add_common_options(fuse, opt);

    CLI::App* reconstruct = app.add_subcommand("reconstruct", "full pipeline");
    add_common_options(reconstruct, opt);
    reconstruct->add_option("--mode", opt.mode, "sir | downsample | native (default sir)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "compare a run against the oracle");
    add_common_options(evaluate, opt);

    CLI::App* bench = app.add_subcommand("bench", "analytic memory budget report");
    add_common_options(bench, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }

    try {
        const sir::RunConfig cfg = build_config(opt);
        if (oracle->parsed()) {
            sir::cmd_oracle_gen(cfg);
            std::cout << "fixture written to " << cfg.output_dir.string() << '\n';
        } else if (recapture->parsed()) {
            sir::cmd_recapture(cfg);
            std::cout << "recaptured model written to " << cfg.output_dir.string() << '\n';
        } else if (cluster->parsed()) {
            const auto clusters = sir::cmd_cluster(cfg);
            std::cout << clusters.size() << " clusters written to "
                      << (cfg.output_dir / "clusters.txt").string() << '\n';
        } else if (depth->parsed()) {
            sir::cmd_depth(cfg);
            std::cout << "depth maps written to " << (cfg.output_dir / "depth").string() << '\n';
        } else if (fuse->parsed()) {
            sir::cmd_fuse(cfg);
            std::cout << "point cloud written to " << (cfg.output_dir / "fused.ply").string()
                      << '\n';
        } else if (reconstruct->parsed()) {
            const auto summary = sir::cmd_reconstruct(cfg, sir::parse_mode(opt.mode));
            std::cout << "mode " << sir::mode_name(summary.mode) << ": peak resident "
                      << summary.peak_resident_bytes << " bytes within budget "
                      << summary.budget_bytes << " bytes\n";
            if (summary.metrics && summary.metrics->pooled_median_abs_err)
                std::cout << "pooled median |depth error| "
                          << *summary.metrics->pooled_median_abs_err << '\n';
        } else if (evaluate->parsed()) {
            const auto metrics = sir::cmd_evaluate(cfg);
            std::cout << sir::metrics_to_json(metrics) << '\n';
        } else if (bench->parsed()) {
            sir::cmd_bench(cfg, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
