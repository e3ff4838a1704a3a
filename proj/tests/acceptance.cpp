// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the binary exits nonzero if any criterion fails. Run from any directory;
// scratch data lands in ./acceptance_scratch.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "sir/memory_budget.hpp"
#include "sir/mvs.hpp"
#include "sir/pipeline.hpp"
#include "sir/recapture.hpp"
#include "test_support.hpp"

using namespace sir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

void run_criterion(const std::string& name, double time_limit_s,
                   const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
        outcome = body();
    } catch (const std::exception& e) {
        outcome.pass = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome.pass && time_limit_s > 0.0 && seconds > time_limit_s) {
        outcome.pass = false;
        outcome.detail += " [over the " + std::to_string(time_limit_s) + " s budget]";
    }
    std::ostringstream line;
    line << (outcome.pass ? "[PASS] " : "[FAIL] ") << name;
    if (!outcome.detail.empty()) line << " -- " << outcome.detail;
    line.setf(std::ios::fixed);
    line.precision(1);
    line << " (" << seconds << " s)";
    std::cout << line.str() << std::endl;
    if (!outcome.pass) ++g_failures;
}

void run_criterion(const std::string& name, const std::function<Outcome()>& body) {
    run_criterion(name, 0.0, body);
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::current_path() / "acceptance_scratch" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::uint8_t> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Identity fixture: 5 cameras in a strip with strong mutual overlap so every
// sub-image keeps every other native view among its stereo parents.
RunConfig identity_fixture_config(const fs::path& dir) {
    RunConfig cfg;
    cfg.output_dir = dir;
    cfg.seed = 1001;
    cfg.oracle.rows = 1;
    cfg.oracle.cols = 5;
    cfg.oracle.altitude = 12.0;
    cfg.oracle.overlap = 0.9;
    cfg.oracle.image_width = 640;
    cfg.oracle.image_height = 480;
    cfg.oracle.extent = 20.0;
    cfg.oracle.height_amplitude = 0.6;
    cfg.oracle.texture_octaves = 7;
    cfg.oracle.proxy_grid = 40;
    cfg.workers = 2;
    return cfg;
}

RunConfig identity_run_config(const fs::path& fixture, const fs::path& out) {
    RunConfig cfg;
    cfg.model_dir = fixture / "sparse";
    cfg.image_dir = fixture / "images";
    cfg.output_dir = out;
    cfg.grid = {2, 2};
    cfg.cluster_size = 20;
    cfg.max_sources = 12;
    cfg.sweep.num_hypotheses = 32;
    cfg.sweep.window = 5;
    cfg.workers = 1;
    return cfg;
}

// Comparison fixture: 6 views at 1280x960; SIR runs 2x2 tiles of 640x480 at
// native resolution, the baseline decimates the full frames to 640x480.
RunConfig comparison_fixture_config(const fs::path& dir) {
    RunConfig cfg;
    cfg.output_dir = dir;
    cfg.seed = 2002;
    cfg.oracle.rows = 2;
    cfg.oracle.cols = 3;
    cfg.oracle.altitude = 12.0;
    cfg.oracle.overlap = 0.62;
    cfg.oracle.image_width = 1280;
    cfg.oracle.image_height = 960;
    cfg.oracle.extent = 20.0;
    cfg.oracle.height_amplitude = 0.35;
    cfg.oracle.texture_octaves = 8;
    cfg.oracle.proxy_grid = 48;
    cfg.workers = 2;
    return cfg;
}

RunConfig comparison_run_config(const fs::path& fixture, const fs::path& out) {
    RunConfig cfg;
    cfg.model_dir = fixture / "sparse";
    cfg.image_dir = fixture / "images";
    cfg.output_dir = out;
    cfg.gt_dir = fixture;
    cfg.grid = {2, 2};
    cfg.max_image_size = 640;
    cfg.cluster_size = 20;
    cfg.max_sources = 8;
    cfg.sweep.num_hypotheses = 128;
    cfg.sweep.window = 5;
    cfg.workers = 1;
    return cfg;
}

struct TileRow {
    int view_id, parent, i, j, ox, oy, w, h, pw, ph;
};

std::vector<TileRow> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path.string());
    std::vector<TileRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        TileRow r{};
        std::istringstream ss(line);
        ss >> r.view_id >> r.parent >> r.i >> r.j >> r.ox >> r.oy >> r.w >> r.h >> r.pw >> r.ph;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

int main() {
    std::cout << "sub-image recapture acceptance suite\n";

    // ---------------------------------------------------------------- 1
    run_criterion("projection equivalence over 1000 randomized camera/grid/point triples",
                  1.0, [] {
        std::mt19937_64 rng(424242);
        std::uniform_int_distribution<int> grid_dist(1, 6);
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const Camera cam = sir::test::random_camera(rng, true);
            const GridSpec grid{grid_dist(rng), grid_dist(rng)};
            const RecaptureSet set = recapture_grid(cam, grid);
            const Eigen::Vector3d point = sir::test::random_in_frustum_point(rng, cam);
            const auto native = project(cam, point);
            if (!native) return Outcome{false, "native projection unexpectedly behind"};
            for (std::size_t k = 0; k < set.refs.size(); ++k) {
                const auto sub = project(set.cameras[k], point);
                if (!sub) return Outcome{false, "sub projection unexpectedly behind"};
                const PixelCoord mapped = map_sub_to_native(set.refs[k], *sub);
                worst = std::max({worst, std::abs(mapped.u - native->u),
                                  std::abs(mapped.v - native->v)});
            }
        }
        std::ostringstream d;
        d << "max |native - (sub + origin)| = " << worst << " px";
        return Outcome{worst < 1e-9, d.str()};
    });

    // ---------------------------------------------------------------- 2
    run_criterion("worked sub-image principal points on the 10300x7700 frame, 5x5 grid", [] {
        Camera cam;
        cam.width = 10300;
        cam.height = 7700;
        cam.intrinsics = {9000.0, 9000.0, 5150.0, 3850.0, 0.0, 0.0};
        const RecaptureSet set = recapture_grid(cam, {5, 5});
        const Camera& s21 = set.cameras[1 * 5 + 2];
        const Camera& s44 = set.cameras[4 * 5 + 4];
        const bool pass = s21.intrinsics.cx == 1030.0 && s21.intrinsics.cy == 2310.0 &&
                          s44.intrinsics.cx == -3090.0 && s44.intrinsics.cy == -2310.0;
        std::ostringstream d;
        d << "(2,1) -> (" << s21.intrinsics.cx << ", " << s21.intrinsics.cy << "), (4,4) -> ("
          << s44.intrinsics.cx << ", " << s44.intrinsics.cy << ")";
        return Outcome{pass, d.str()};
    });

    // ---------------------------------------------------------------- 3
    run_criterion("memory arithmetic: 10K x 10K float RGB costs 1.2 GB, two views 2.4 GB", [] {
        const std::uint64_t one = image_bytes(10000, 10000, 3, 4);
        const std::uint64_t two = 2 * one;
        std::ostringstream d;
        d << one << " and " << two << " bytes";
        return Outcome{one == 1200000000ull && two == 2400000000ull, d.str()};
    });

    // ---------------------------------------------------------------- 4 (analytic half)
    run_criterion("5x5 recapture divides the image-buffer term exactly 25x", 1.0, [] {
        SweepParams params;
        const MemoryReport full = estimate_cluster_peak(19, 10000, 10000, 3, 4, {1, 1}, params);
        const MemoryReport tiled = estimate_cluster_peak(19, 10000, 10000, 3, 4, {5, 5}, params);
        std::ostringstream d;
        d << full.image_buffer_bytes << " / " << tiled.image_buffer_bytes;
        return Outcome{full.image_buffer_bytes == 25 * tiled.image_buffer_bytes, d.str()};
    });

    // Shared fixtures.
    const fs::path identity_fixture = scratch("identity_fixture");
    cmd_oracle_gen(identity_fixture_config(identity_fixture));

    // ---------------------------------------------------------------- 7
    run_criterion("oracle self-consistency: ground truth depths lie on the surface", [&] {
        RunConfig cfg = identity_fixture_config(identity_fixture);
        const SceneSpec spec{cfg.seed, cfg.oracle.extent, cfg.oracle.height_amplitude,
                             cfg.oracle.texture_octaves};
        const Scene scene(spec);
        const auto cams = make_aerial_cameras(scene, cfg.oracle.rows, cfg.oracle.cols,
                                              cfg.oracle.altitude, cfg.oracle.overlap,
                                              cfg.oracle.image_width, cfg.oracle.image_height);
        double worst = 0.0;
        std::size_t valid = 0;
        for (const Camera& cam : cams) {
            const GroundTruthView view = render_view(scene, cam);
            for (int y = 0; y < cam.height; ++y) {
                for (int x = 0; x < cam.width; ++x) {
                    const double d = view.depth_at(x, y);
                    if (d <= 0.0) continue;
                    const auto world = unproject(cam, {x + 0.5, y + 0.5}, d);
                    if (!world) return Outcome{false, "unproject failed on a valid pixel"};
                    worst = std::max(worst,
                                     std::abs(world->z() - scene.height(world->x(), world->y())));
                    ++valid;
                }
            }
        }
        std::ostringstream d;
        d << "max surface miss " << worst << " over " << valid << " px";
        return Outcome{valid > 0 && worst < 1e-5, d.str()};
    });

    // ---------------------------------------------------------------- 8
    run_criterion("I/O round-trips: sparse model, pixmap, SIRD, PLY", [&] {
        const fs::path dir = scratch("io_roundtrip");
        // Model with a recaptured (negative principal point) camera.
        SceneModel model;
        Camera neg;
        neg.width = 2060;
        neg.height = 1540;
        neg.intrinsics = {9000.0, 9000.0, -3090.0, -2310.0, 0.0123, -0.00077};
        model.cameras.emplace(1, neg);
        std::mt19937_64 rng(6);
        View v;
        v.camera_id = 1;
        v.name = "t_s4_4.ppm";
        v.pose = Extrinsics(sir::test::random_rotation(rng), {0.1, 1.0 / 7.0, -2.5});
        model.views.emplace(3, v);
        model.points.push_back({{0.5, -0.25, 12.0}, {9, 18, 27}, {3}});
        write_sparse_model(model, dir / "sparse");
        const SceneModel back = read_sparse_model(dir / "sparse");
        bool ok = back.cameras.at(1).intrinsics.cx == -3090.0 &&
                  back.cameras.at(1).intrinsics.k1 == neg.intrinsics.k1 &&
                  back.views.at(3).name == v.name &&
                  (back.views.at(3).pose.rotation - v.pose.rotation).cwiseAbs().maxCoeff() <
                      1e-9 &&
                  back.points.size() == 1 && back.points[0].position.x() == 0.5;

        ImageU8 img = ImageU8::make(64, 48, 3);
        for (std::size_t i = 0; i < img.data.size(); ++i)
            img.data[i] = static_cast<std::uint8_t>(rng());
        write_image(img, dir / "img.ppm");
        ok = ok && read_image(dir / "img.ppm").data == img.data;

        DepthMap dm = DepthMap::make(32, 20);
        for (std::size_t i = 0; i < dm.depth.size(); ++i)
            dm.depth[i] = i % 7 == 0 ? 0.0f : 0.25f * static_cast<float>(i);
        write_depth_map(dm, dir / "d.sird");
        ok = ok && read_depth_map(dir / "d.sird").depth == dm.depth;

        PointCloud cloud;
        cloud.points.push_back({{1.0, 2.0, 3.0}, {255, 255, 255}, 1});
        cloud.points.push_back({{-0.125, 17.0 / 3.0, -9.75}, {1, 2, 3}, 4});
        write_point_cloud(cloud, dir / "c.ply");
        const PointCloud cback = read_point_cloud(dir / "c.ply");
        ok = ok && cback.points.size() == 2 &&
             cback.points[1].position == cloud.points[1].position &&
             cback.points[1].color == cloud.points[1].color;
        return Outcome{ok, ""};
    });

    // ---------------------------------------------------------------- 5
    const fs::path native_run = scratch("identity_native");
    const fs::path sir11_run = scratch("identity_sir_1x1");
    const fs::path sir22_run = scratch("identity_sir_2x2");
    run_criterion("SIR/native depth identity on the 640x480 five-view fixture", 120.0, [&] {
        RunConfig native_cfg = identity_run_config(identity_fixture, native_run);
        const ReconstructSummary native_sum =
            cmd_reconstruct(native_cfg, ReconstructMode::Native);

        RunConfig sir11_cfg = identity_run_config(identity_fixture, sir11_run);
        sir11_cfg.grid = {1, 1};
        cmd_reconstruct(sir11_cfg, ReconstructMode::Sir);

        RunConfig sir22_cfg = identity_run_config(identity_fixture, sir22_run);
        const ReconstructSummary sir_sum = cmd_reconstruct(sir22_cfg, ReconstructMode::Sir);
        if (native_sum.gather_misses != 0 || sir_sum.gather_misses != 0)
            return Outcome{false, "source gathers missed resident tiles"};

        // 1x1 grid: bit-identical depth map payloads.
        const SceneModel native_model = read_sparse_model(identity_fixture / "sparse");
        for (const auto& [vid, view] : native_model.views) {
            const std::string stem = view.name.substr(0, view.name.find_last_of('.'));
            if (slurp(native_run / "depth" / (stem + ".sird")) !=
                slurp(sir11_run / "depth" / (stem + "_s0_0.sird")))
                return Outcome{false, "1x1 sir depth differs from native for " + stem};
        }

        // 2x2 grid: interior tile pixels equal the native run exactly.
        const auto manifest = read_manifest(sir22_run / "recaptured/tiles.txt");
        const SceneModel sub_model = read_sparse_model(sir22_run / "recaptured/sparse");
        const int hw = sir22_cfg.sweep.window / 2;
        std::size_t compared = 0, mismatched = 0, interior_valid = 0;
        for (const TileRow& row : manifest) {
            const std::string native_stem = native_model.views.at(row.parent).name.substr(
                0, native_model.views.at(row.parent).name.find_last_of('.'));
            const std::string sub_name = sub_model.views.at(row.view_id).name;
            const std::string sub_stem = sub_name.substr(0, sub_name.find_last_of('.'));
            const DepthMap nat = read_depth_map(native_run / "depth" / (native_stem + ".sird"));
            const DepthMap sub = read_depth_map(sir22_run / "depth" / (sub_stem + ".sird"));
            for (int y = hw; y < row.h - hw; ++y) {
                for (int x = hw; x < row.w - hw; ++x) {
                    const float a = sub.at(x, y);
                    const float b = nat.at(x + row.ox, y + row.oy);
                    ++compared;
                    if (a != b) ++mismatched;
                    if (a > 0.0f) ++interior_valid;
                }
            }
        }
        std::ostringstream d;
        d << mismatched << " of " << compared << " interior pixels differ ("
          << interior_valid << " valid)";
        return Outcome{mismatched == 0 && interior_valid > compared / 2, d.str()};
    });

    // ---------------------------------------------------------------- 6 + 4 (instrumented half)
    const fs::path comparison_fixture = scratch("comparison_fixture");
    const fs::path sir_run = scratch("comparison_sir");
    const fs::path down_run = scratch("comparison_down");
    ReconstructSummary sir_summary, down_summary;
    run_criterion("SIR beats the decimation baseline on the 1280x960 six-view fixture",
                  600.0, [&] {
        cmd_oracle_gen(comparison_fixture_config(comparison_fixture));
        RunConfig sir_cfg = comparison_run_config(comparison_fixture, sir_run);
        sir_summary = cmd_reconstruct(sir_cfg, ReconstructMode::Sir);
        RunConfig down_cfg = comparison_run_config(comparison_fixture, down_run);
        down_summary = cmd_reconstruct(down_cfg, ReconstructMode::Downsample);
        if (!sir_summary.metrics || !down_summary.metrics)
            return Outcome{false, "missing metrics"};
        if (!sir_summary.metrics->pooled_median_abs_err ||
            !down_summary.metrics->pooled_median_abs_err)
            return Outcome{false, "missing pooled medians"};
        const double sir_med = *sir_summary.metrics->pooled_median_abs_err;
        const double down_med = *down_summary.metrics->pooled_median_abs_err;
        const double sir_comp = sir_summary.metrics->mean_completeness;
        const double down_comp = down_summary.metrics->mean_completeness;
        std::ostringstream d;
        d << "median |err| " << sir_med << " vs " << down_med << " (ratio "
          << sir_med / down_med << "), completeness " << sir_comp << " vs " << down_comp;
        return Outcome{sir_med <= 0.7 * down_med && sir_comp >= down_comp, d.str()};
    });

    run_criterion("resident image bytes stay within one cluster's tile budget", [&] {
        if (sir_summary.cluster_memory.empty())
            return Outcome{false, "sir comparison run did not record cluster memory"};
        for (const ClusterMemory& c : sir_summary.cluster_memory)
            if (c.peak_bytes > c.budget_bytes)
                return Outcome{false, "cluster " + std::to_string(c.cluster_id) +
                                          " exceeded its budget"};
        std::ostringstream d;
        d << "peak " << sir_summary.peak_resident_bytes << " bytes <= budget "
          << sir_summary.budget_bytes << " bytes (all images: "
          << sir_summary.total_image_bytes << " bytes)";
        return Outcome{sir_summary.peak_resident_bytes <= sir_summary.budget_bytes, d.str()};
    });

    // ---------------------------------------------------------------- 9
    run_criterion("reconstruction is byte-identical for SIR_WORKERS=1 and SIR_WORKERS=8", [&] {
        const fs::path fixture = scratch("determinism_fixture");
        RunConfig fix_cfg;
        fix_cfg.output_dir = fixture;
        fix_cfg.seed = 3003;
        fix_cfg.oracle.rows = 2;
        fix_cfg.oracle.cols = 2;
        fix_cfg.oracle.altitude = 12.0;
        fix_cfg.oracle.overlap = 0.7;
        fix_cfg.oracle.image_width = 240;
        fix_cfg.oracle.image_height = 180;
        fix_cfg.oracle.extent = 20.0;
        fix_cfg.oracle.height_amplitude = 0.6;
        fix_cfg.oracle.texture_octaves = 6;
        fix_cfg.oracle.proxy_grid = 32;
        fix_cfg.workers = 2;
        cmd_oracle_gen(fix_cfg);

        auto run_with = [&](const char* workers, const fs::path& out) {
            setenv("SIR_WORKERS", workers, 1);
            RunConfig cfg;
            cfg.model_dir = fixture / "sparse";
            cfg.image_dir = fixture / "images";
            cfg.output_dir = out;
            cfg.grid = {2, 2};
            cfg.cluster_size = 20;
            cfg.max_sources = 8;
            cfg.sweep.num_hypotheses = 16;
            cfg.sweep.window = 5;
            cmd_reconstruct(cfg, ReconstructMode::Sir);
            unsetenv("SIR_WORKERS");
        };
        const fs::path out1 = scratch("determinism_w1");
        const fs::path out8 = scratch("determinism_w8");
        run_with("1", out1);
        run_with("8", out8);

        if (slurp(out1 / "fused.ply") != slurp(out8 / "fused.ply"))
            return Outcome{false, "fused.ply differs"};
        std::size_t files = 0;
        for (const char* sub : {"depth", "depth_filtered"}) {
            for (const auto& entry : fs::directory_iterator(out1 / sub)) {
                if (slurp(entry.path()) != slurp(out8 / sub / entry.path().filename()))
                    return Outcome{false, std::string(sub) + "/" +
                                              entry.path().filename().string() + " differs"};
                ++files;
            }
        }
        std::ostringstream d;
        d << "fused.ply and " << files << " depth maps identical";
        return Outcome{true, d.str()};
    });

    std::cout << (g_failures == 0 ? "all criteria passed" : "criteria FAILED") << " ("
              << g_failures << " failures)\n";
    return g_failures == 0 ? 0 : 1;
}
