// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include "sir/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

namespace sir {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Small utilities

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (n == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::string view_stem(const std::string& name) {
    const auto dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

std::string view_extension(const std::string& name) {
    const auto dot = name.find_last_of('.');
    return dot == std::string::npos ? std::string(".ppm") : name.substr(dot);
}

// ---------------------------------------------------------------------------
// Resident-image instrumentation. Loads go through the pool so the run can
// prove how many image bytes were resident at once; grayscale working copies
// are tracked by the same counter.

class ImagePool {
  public:
    std::shared_ptr<const ImageU8> load(const std::filesystem::path& path) {
        std::scoped_lock lock(mutex_);
        const std::string key = path.string();
        if (armed_ && !allowed_.count(key))
            throw InvalidArgument("image load outside the cluster's resident set: " + key);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        auto img = std::make_shared<ImageU8>(read_image(path));
        current_ += img->byte_size();
        peak_ = std::max(peak_, current_);
        cache_.emplace(key, img);
        return img;
    }

    std::shared_ptr<const ImageF32> load_gray(const std::filesystem::path& path) {
        {
            std::scoped_lock lock(mutex_);
            auto it = gray_.find(path.string());
            if (it != gray_.end()) return it->second;
        }
        auto img = load(path);
        std::scoped_lock lock(mutex_);
        const std::string key = path.string();
        auto it = gray_.find(key);
        if (it != gray_.end()) return it->second;
        auto gray = std::make_shared<ImageF32>(luminance(*img));
        current_ += gray->data.size() * sizeof(float);
        peak_ = std::max(peak_, current_);
        gray_.emplace(key, gray);
        // The 8-bit original is only needed to build the working copy here.
        release_u8_locked(key);
        return gray;
    }

    void arm(std::set<std::string> allowed) {
        std::scoped_lock lock(mutex_);
        armed_ = true;
        allowed_ = std::move(allowed);
    }

    void release_all() {
        std::scoped_lock lock(mutex_);
        cache_.clear();
        gray_.clear();
        current_ = 0;
        peak_ = 0;
        armed_ = false;
        allowed_.clear();
    }

    std::uint64_t take_peak() {
        std::scoped_lock lock(mutex_);
        const std::uint64_t p = peak_;
        peak_ = current_;
        return p;
    }

  private:
    void release_u8_locked(const std::string& key) {
        auto it = cache_.find(key);
        if (it == cache_.end()) return;
        current_ -= it->second->byte_size();
        cache_.erase(it);
    }

    std::mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<const ImageU8>> cache_;
    std::unordered_map<std::string, std::shared_ptr<const ImageF32>> gray_;
    std::uint64_t current_ = 0;
    std::uint64_t peak_ = 0;
    bool armed_ = false;
    std::set<std::string> allowed_;
};

std::uint64_t resident_cost(int width, int height, int channels) {
    // u8 pixels while converting plus the f32 working copy.
    return static_cast<std::uint64_t>(width) * height * (static_cast<std::uint64_t>(channels) + 4);
}

// ---------------------------------------------------------------------------
// Tile manifest: how each working view maps into its parent's pixel frame.

struct TileRecord {
    int view_id = 0;
    int parent_view_id = 0;
    int i = -1;
    int j = -1;
    int origin_x = 0;
    int origin_y = 0;
    int width = 0;
    int height = 0;
    int parent_width = 0;
    int parent_height = 0;
};

struct TileIndex {
    std::map<int, TileRecord> by_view;
    std::map<int, std::vector<int>> children;  // parent id -> sub view ids, sorted

    const TileRecord& record(int view_id) const {
        auto it = by_view.find(view_id);
        if (it == by_view.end())
            throw InvalidArgument("no tile record for view " + std::to_string(view_id));
        return it->second;
    }
    int parent_of(int view_id) const { return record(view_id).parent_view_id; }
};

TileIndex self_tiles(const SceneModel& model) {
    TileIndex index;
    for (const auto& [id, view] : model.views) {
        const Camera cam = model.view_camera(id);
        TileRecord rec;
        rec.view_id = id;
        rec.parent_view_id = id;
        rec.width = cam.width;
        rec.height = cam.height;
        rec.parent_width = cam.width;
        rec.parent_height = cam.height;
        index.by_view.emplace(id, rec);
        index.children[id].push_back(id);
    }
    return index;
}

void write_tile_manifest(const TileIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path.string());
    out << "# view parent i j origin_x origin_y width height parent_width parent_height\n";
    for (const auto& [id, r] : index.by_view)
        out << r.view_id << ' ' << r.parent_view_id << ' ' << r.i << ' ' << r.j << ' '
            << r.origin_x << ' ' << r.origin_y << ' ' << r.width << ' ' << r.height << ' '
            << r.parent_width << ' ' << r.parent_height << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

TileIndex read_tile_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path.string());
    TileIndex index;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        TileRecord r;
        std::istringstream ss(line);
        if (!(ss >> r.view_id >> r.parent_view_id >> r.i >> r.j >> r.origin_x >> r.origin_y >>
              r.width >> r.height >> r.parent_width >> r.parent_height))
            throw ParseError(path.string(), 0, "malformed tile manifest row");
        index.by_view.emplace(r.view_id, r);
        index.children[r.parent_view_id].push_back(r.view_id);
    }
    for (auto& [parent, kids] : index.children) std::sort(kids.begin(), kids.end());
    return index;
}

// ---------------------------------------------------------------------------
// Config

template <typename T>
void read_key(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end())
            throw InvalidArgument("unknown config key '" + key + "' in " + where);
    }
}

}  // namespace

ReconstructMode parse_mode(const std::string& name) {
    if (name == "sir") return ReconstructMode::Sir;
    if (name == "downsample") return ReconstructMode::Downsample;
    if (name == "native") return ReconstructMode::Native;
    throw InvalidArgument("unknown mode '" + name + "' (expected sir|downsample|native)");
}

std::string mode_name(ReconstructMode mode) {
    switch (mode) {
        case ReconstructMode::Sir: return "sir";
        case ReconstructMode::Downsample: return "downsample";
        default: return "native";
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    check_keys(j,
               {"model_dir", "image_dir", "output_dir", "gt_dir", "grid", "max_image_size",
                "cluster_size", "max_sources", "sweep", "fuse", "workers", "seed", "oracle",
                "bench"},
               path.string());
    RunConfig cfg;
    std::string s;
    if (j.contains("model_dir")) cfg.model_dir = j.at("model_dir").get<std::string>();
    if (j.contains("image_dir")) cfg.image_dir = j.at("image_dir").get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("gt_dir")) cfg.gt_dir = j.at("gt_dir").get<std::string>();
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        check_keys(g, {"cols", "rows"}, "grid");
        read_key(g, "cols", cfg.grid.cols);
        read_key(g, "rows", cfg.grid.rows);
    }
    read_key(j, "max_image_size", cfg.max_image_size);
    read_key(j, "cluster_size", cfg.cluster_size);
    read_key(j, "max_sources", cfg.max_sources);
    if (j.contains("sweep")) {
        const json& g = j.at("sweep");
        check_keys(g, {"num_hypotheses", "window", "cost_threshold", "min_depth", "max_depth"},
                   "sweep");
        read_key(g, "num_hypotheses", cfg.sweep.num_hypotheses);
        read_key(g, "window", cfg.sweep.window);
        read_key(g, "cost_threshold", cfg.sweep.cost_threshold);
        read_key(g, "min_depth", cfg.sweep.min_depth);
        read_key(g, "max_depth", cfg.sweep.max_depth);
    }
    if (j.contains("fuse")) {
        const json& g = j.at("fuse");
        check_keys(g, {"min_support", "reproj_tol", "depth_rel_tol"}, "fuse");
        read_key(g, "min_support", cfg.fuse.min_support);
        read_key(g, "reproj_tol", cfg.fuse.reproj_tol);
        read_key(g, "depth_rel_tol", cfg.fuse.depth_rel_tol);
    }
    read_key(j, "workers", cfg.workers);
    read_key(j, "seed", cfg.seed);
    if (j.contains("oracle")) {
        const json& g = j.at("oracle");
        check_keys(g,
                   {"rows", "cols", "altitude", "overlap", "image_width", "image_height",
                    "extent", "height_amplitude", "texture_octaves", "k1", "k2", "proxy_grid"},
                   "oracle");
        read_key(g, "rows", cfg.oracle.rows);
        read_key(g, "cols", cfg.oracle.cols);
        read_key(g, "altitude", cfg.oracle.altitude);
        read_key(g, "overlap", cfg.oracle.overlap);
        read_key(g, "image_width", cfg.oracle.image_width);
        read_key(g, "image_height", cfg.oracle.image_height);
        read_key(g, "extent", cfg.oracle.extent);
        read_key(g, "height_amplitude", cfg.oracle.height_amplitude);
        read_key(g, "texture_octaves", cfg.oracle.texture_octaves);
        read_key(g, "k1", cfg.oracle.k1);
        read_key(g, "k2", cfg.oracle.k2);
        read_key(g, "proxy_grid", cfg.oracle.proxy_grid);
    }
    if (j.contains("bench")) {
        const json& g = j.at("bench");
        check_keys(g, {"image_width", "image_height", "channels", "bytes_per_sample", "sources"},
                   "bench");
        read_key(g, "image_width", cfg.bench.image_width);
        read_key(g, "image_height", cfg.bench.image_height);
        read_key(g, "channels", cfg.bench.channels);
        read_key(g, "bytes_per_sample", cfg.bench.bytes_per_sample);
        read_key(g, "sources", cfg.bench.sources);
    }
    return cfg;
}

int resolve_workers(const RunConfig& config) {
    int workers = config.workers;
    if (const char* env = std::getenv("SIR_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) workers = static_cast<int>(v);
    }
    if (workers <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        workers = hw > 0 ? static_cast<int>(hw) : 1;
    }
    return workers;
}

// ---------------------------------------------------------------------------
// Oracle fixture generation

namespace {

std::string oracle_view_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%02d.ppm", index);
    return buf;
}

SceneSpec scene_spec_from_config(const OracleConfig& oc, std::uint64_t seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.extent = oc.extent;
    spec.height_amplitude = oc.height_amplitude;
    spec.texture_octaves = oc.texture_octaves;
    return spec;
}

}  // namespace

void cmd_oracle_gen(const RunConfig& config) {
    if (config.output_dir.empty()) throw InvalidArgument("oracle-gen needs an output_dir");
    const OracleConfig& oc = config.oracle;
    if (!(oc.altitude > oc.height_amplitude * 2.0))
        throw InvalidArgument("altitude must clear the terrain (need altitude > 2*amplitude)");

    const SceneSpec spec = scene_spec_from_config(oc, config.seed);
    const Scene scene(spec);
    const std::vector<Camera> cameras =
        make_aerial_cameras(scene, oc.rows, oc.cols, oc.altitude, oc.overlap, oc.image_width,
                            oc.image_height, oc.k1, oc.k2);

    const auto out = config.output_dir;
    std::filesystem::create_directories(out / "images");
    std::filesystem::create_directories(out / "gt_depth");

    SceneModel model;
    model.cameras.emplace(1, Camera{cameras[0].intrinsics, Extrinsics{}, oc.image_width,
                                    oc.image_height});
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        View view;
        view.camera_id = 1;
        view.name = oracle_view_name(static_cast<int>(v));
        view.pose = cameras[v].extrinsics;
        model.views.emplace(static_cast<int>(v) + 1, view);
    }

    parallel_for(cameras.size(), resolve_workers(config), [&](std::size_t v) {
        const GroundTruthView gt = render_view(scene, cameras[v]);
        const std::string stem = view_stem(oracle_view_name(static_cast<int>(v)));
        write_image(gt.quantized(), out / "images" / (stem + ".ppm"));
        write_depth_map(gt.to_depth_map(static_cast<int>(v) + 1),
                        out / "gt_depth" / (stem + ".sird"));
    });

    // Proxy points on the surface, with the views that actually see them.
    const int grid = std::max(2, oc.proxy_grid);
    const double half = oc.extent / 2.0;
    for (int gy = 0; gy < grid; ++gy) {
        for (int gx = 0; gx < grid; ++gx) {
            const double x = -half + (gx + 0.5) * oc.extent / grid;
            const double y = -half + (gy + 0.5) * oc.extent / grid;
            SparsePoint pt;
            pt.position = Eigen::Vector3d(x, y, scene.height(x, y));
            const Eigen::Vector3d c = scene.surface_color(x, y);
            for (int k = 0; k < 3; ++k)
                pt.color[k] = static_cast<std::uint8_t>(
                    std::floor(std::clamp(c[k], 0.0, 1.0) * 255.0 + 0.5));
            for (std::size_t v = 0; v < cameras.size(); ++v) {
                const auto uv = project(cameras[v], pt.position);
                if (uv && in_bounds(*uv, cameras[v].width, cameras[v].height))
                    pt.view_ids.push_back(static_cast<int>(v) + 1);
            }
            if (!pt.view_ids.empty()) model.points.push_back(std::move(pt));
        }
    }
    write_sparse_model(model, out / "sparse");

    json j;
    j["seed"] = config.seed;
    j["extent"] = oc.extent;
    j["height_amplitude"] = oc.height_amplitude;
    j["texture_octaves"] = oc.texture_octaves;
    j["rows"] = oc.rows;
    j["cols"] = oc.cols;
    j["altitude"] = oc.altitude;
    j["overlap"] = oc.overlap;
    j["image_width"] = oc.image_width;
    j["image_height"] = oc.image_height;
    j["k1"] = oc.k1;
    j["k2"] = oc.k2;
    std::ofstream spec_out(out / "scene_spec.json");
    spec_out << j.dump(2) << '\n';
    if (!spec_out) throw IoError("write failed: scene_spec.json");
}

// ---------------------------------------------------------------------------
// Recapture stage

void cmd_recapture(const RunConfig& config) {
    if (config.model_dir.empty() || config.image_dir.empty() || config.output_dir.empty())
        throw InvalidArgument("recapture needs model_dir, image_dir, and output_dir");
    const SceneModel native = read_sparse_model(config.model_dir);
    const auto out = config.output_dir;
    std::filesystem::create_directories(out / "images");

    SceneModel sub_model;
    TileIndex index;
    // Sub cameras are shared by tiles with the same (native camera, i, j).
    std::map<std::tuple<int, int, int>, int> camera_ids;
    int next_view = 1;

    for (const auto& [view_id, view] : native.views) {
        const Camera cam = native.view_camera(view_id);
        const RecaptureSet set = recapture_grid(cam, config.grid, std::to_string(view_id));
        const ImageU8 image = read_image(config.image_dir / view.name);
        if (image.width != cam.width || image.height != cam.height)
            throw DimensionMismatch("image does not match camera dimensions: " + view.name);
        auto tiles = split_image(image, config.grid, std::to_string(view_id));

        const std::string stem = view_stem(view.name);
        const std::string ext = view_extension(view.name);
        for (std::size_t k = 0; k < set.refs.size(); ++k) {
            const SubImageRef& ref = set.refs[k];
            const auto cam_key = std::make_tuple(view.camera_id, *ref.i, *ref.j);
            auto cit = camera_ids.find(cam_key);
            if (cit == camera_ids.end()) {
                const int cam_id = static_cast<int>(sub_model.cameras.size()) + 1;
                sub_model.cameras.emplace(
                    cam_id, Camera{set.cameras[k].intrinsics, Extrinsics{}, ref.width,
                                   ref.height});
                cit = camera_ids.emplace(cam_key, cam_id).first;
            }
            View sub_view;
            sub_view.camera_id = cit->second;
            sub_view.name = sub_image_id(stem, *ref.i, *ref.j) + ext;
            sub_view.pose = cam.extrinsics;
            const int sub_id = next_view++;
            sub_model.views.emplace(sub_id, sub_view);

            TileRecord rec;
            rec.view_id = sub_id;
            rec.parent_view_id = view_id;
            rec.i = *ref.i;
            rec.j = *ref.j;
            rec.origin_x = ref.origin_x;
            rec.origin_y = ref.origin_y;
            rec.width = ref.width;
            rec.height = ref.height;
            rec.parent_width = cam.width;
            rec.parent_height = cam.height;
            index.by_view.emplace(sub_id, rec);
            index.children[view_id].push_back(sub_id);

            write_image(tiles[k].second, out / "images" / sub_view.name);
        }
    }

    // Re-home every point's observations onto the tiles that actually see it.
    std::map<int, std::vector<std::pair<int, Camera>>> tiles_of_parent;
    for (const auto& [sub_id, rec] : index.by_view)
        tiles_of_parent[rec.parent_view_id].emplace_back(sub_id,
                                                         sub_model.view_camera(sub_id));
    for (const SparsePoint& pt : native.points) {
        SparsePoint moved = pt;
        moved.view_ids.clear();
        for (int parent : pt.view_ids) {
            for (const auto& [sub_id, cam] : tiles_of_parent[parent]) {
                const auto uv = project(cam, pt.position);
                if (uv && in_bounds(*uv, cam.width, cam.height)) moved.view_ids.push_back(sub_id);
            }
        }
        std::sort(moved.view_ids.begin(), moved.view_ids.end());
        sub_model.points.push_back(std::move(moved));
    }

    write_sparse_model(sub_model, out / "sparse");
    write_tile_manifest(index, out / "tiles.txt");
}

// ---------------------------------------------------------------------------
// Clustering over a model

namespace {

std::vector<Eigen::Vector3d> proxy_positions(const SceneModel& model) {
    std::vector<Eigen::Vector3d> proxies;
    proxies.reserve(model.points.size());
    for (const auto& pt : model.points) proxies.push_back(pt.position);
    return proxies;
}

OverlapGraph model_graph(const SceneModel& model) {
    const auto proxies = proxy_positions(model);
    if (proxies.empty())
        throw EmptyProxy();
    std::vector<std::pair<int, Camera>> views;
    views.reserve(model.views.size());
    for (const auto& [id, view] : model.views) views.emplace_back(id, model.view_camera(id));
    return build_overlap_graph(views, proxies);
}

std::vector<Cluster> cluster_model(const OverlapGraph& graph, const RunConfig& config) {
    return cluster_views(graph, config.cluster_size, config.max_sources);
}

}  // namespace

std::vector<Cluster> cmd_cluster(const RunConfig& config) {
    if (config.model_dir.empty() || config.output_dir.empty())
        throw InvalidArgument("cluster needs model_dir and output_dir");
    const SceneModel model = read_sparse_model(config.model_dir);
    const OverlapGraph graph = model_graph(model);
    const auto clusters = cluster_model(graph, config);
    std::filesystem::create_directories(config.output_dir);
    write_clusters(clusters, config.output_dir / "clusters.txt");
    return clusters;
}

// ---------------------------------------------------------------------------
// Depth stage

namespace {

struct DepthRange {
    double min_depth = 0.0;
    double max_depth = 0.0;
};

// Span-padded range of the sparse depths seen by the cluster's members,
// measured in the members' parent frames so a tiled model sweeps exactly
// the range its native counterpart would. Falls back to the configured
// range when no member's parent observes a point.
DepthRange cluster_depth_range(const SceneModel& model, const TileIndex& tiles,
                               const Cluster& cluster, const SweepParams& params) {
    std::map<int, Camera> parent_cams;  // parent id -> pose carrier
    for (int vid : cluster.members)
        parent_cams.try_emplace(tiles.parent_of(vid), model.view_camera(vid));

    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const SparsePoint& pt : model.points) {
        int last_parent = -1;
        for (int vid : pt.view_ids) {
            const int parent = tiles.parent_of(vid);
            if (parent == last_parent) continue;  // several tiles of one frame
            last_parent = parent;
            const auto it = parent_cams.find(parent);
            if (it == parent_cams.end()) continue;
            const double z = camera_depth(it->second, pt.position);
            if (z <= kBehindEpsilon) continue;
            if (!any) {
                lo = hi = z;
                any = true;
            } else {
                lo = std::min(lo, z);
                hi = std::max(hi, z);
            }
        }
    }
    if (!any) {
        if (params.min_depth > 0.0 && params.max_depth > params.min_depth)
            return {params.min_depth, params.max_depth};
        throw DegenerateRange(
            "no sparse depth observations in cluster and no configured depth range");
    }
    const double span = hi - lo;
    if (span < 1e-9 * hi) return {std::max(lo * 0.8, 1e-9), hi * 1.25};
    return {std::max(lo - 0.2 * span, std::min(lo * 0.5, lo - 1e-9)), hi + 0.2 * span};
}

// Ranked stereo sources for a reference: members and borrowed views of the
// cluster, same-parent tiles excluded (zero baseline), floor applied, ties
// toward the smaller id.
std::vector<int> rank_sources(int reference_id, const Cluster& cluster, const OverlapGraph& graph,
                              const TileIndex& tiles, int k) {
    const int ref_parent = tiles.parent_of(reference_id);
    std::vector<std::pair<double, int>> ranked;
    auto consider = [&](int id) {
        if (id == reference_id || tiles.parent_of(id) == ref_parent) return;
        const double s = graph.score(reference_id, id);
        if (s > kOverlapFloor) ranked.emplace_back(-s, id);
    };
    for (int id : cluster.members) consider(id);
    for (int id : cluster.borrowed) consider(id);
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> out;
    const int take = std::min<int>(k, static_cast<int>(ranked.size()));
    out.reserve(static_cast<std::size_t>(take));
    for (int i = 0; i < take; ++i) out.push_back(ranked[i].second);
    return out;
}

struct IntRect {
    long x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool intersects(long ax0, long ay0, long ax1, long ay1) const {
        return ax0 < x1 && x0 < ax1 && ay0 < y1 && y0 < ay1;
    }
};

// Pixel rectangle in the parent frame that bounds every window tap the sweep
// can request when matching this reference against this parent over the
// depth range. Boundary pixels of the reference are swept at several depths;
// the window, bilinear supports, and a safety margin are padded on top.
IntRect warp_bounds(const Camera& ref, const Camera& parent_frame, double min_depth,
                    double max_depth, int window) {
    const int hw = window / 2;
    double lo_u = 0, hi_u = 0, lo_v = 0, hi_v = 0;
    bool any = false;
    const int step = std::max(1, std::min(ref.width, ref.height) / 16);
    std::vector<double> depths;
    for (int k = 0; k < 5; ++k)
        depths.push_back(min_depth * std::pow(max_depth / min_depth, k / 4.0));

    auto sample = [&](double u, double v) {
        for (double d : depths) {
            const auto world = unproject(ref, PixelCoord{u, v}, d);
            if (!world) continue;
            const auto uv = project(parent_frame, *world);
            if (!uv) continue;
            if (!any) {
                lo_u = hi_u = uv->u;
                lo_v = hi_v = uv->v;
                any = true;
            } else {
                lo_u = std::min(lo_u, uv->u);
                hi_u = std::max(hi_u, uv->u);
                lo_v = std::min(lo_v, uv->v);
                hi_v = std::max(hi_v, uv->v);
            }
        }
    };
    for (int x = 0; x <= ref.width; x += step) {
        sample(std::min<double>(x, ref.width), 0.0);
        sample(std::min<double>(x, ref.width), ref.height);
    }
    for (int y = 0; y <= ref.height; y += step) {
        sample(0.0, std::min<double>(y, ref.height));
        sample(ref.width, std::min<double>(y, ref.height));
    }
    if (!any) return {};

    const long pad = hw + 4;
    IntRect rect;
    rect.x0 = std::max<long>(0, static_cast<long>(std::floor(lo_u)) - pad);
    rect.y0 = std::max<long>(0, static_cast<long>(std::floor(lo_v)) - pad);
    rect.x1 = std::min<long>(parent_frame.width, static_cast<long>(std::ceil(hi_u)) + pad);
    rect.y1 = std::min<long>(parent_frame.height, static_cast<long>(std::ceil(hi_v)) + pad);
    return rect;
}

struct RefPlan {
    int ref_id = 0;
    // parent id -> resident tile view ids, in ranked-parent order
    std::vector<std::pair<int, std::vector<int>>> groups;
};

struct ViewMeta {
    int view_id = 0;
    std::string name;
    double min_depth = 0.0;
    double max_depth = 0.0;
    int num_hypotheses = 0;
};

Camera parent_frame_camera(const SceneModel& model, const TileIndex& tiles, int any_tile_id) {
    const TileRecord& rec = tiles.record(any_tile_id);
    Camera cam = model.view_camera(any_tile_id);
    cam.intrinsics.cx += rec.origin_x;
    cam.intrinsics.cy += rec.origin_y;
    cam.width = rec.parent_width;
    cam.height = rec.parent_height;
    return cam;
}

struct DepthStageResult {
    std::vector<ClusterMemory> cluster_memory;
    std::uint64_t gather_misses = 0;
    std::vector<ViewMeta> view_meta;
    std::size_t max_sources_seen = 0;
};

DepthStageResult depth_stage(const SceneModel& model, const TileIndex& tiles,
                             const std::vector<Cluster>& clusters, const OverlapGraph& graph,
                             const RunConfig& config,
                             const std::filesystem::path& image_root,
                             const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "depth");
    DepthStageResult result;
    ImagePool pool;
    std::mutex meta_mutex;
    std::atomic<std::uint64_t> misses{0};
    const int workers = resolve_workers(config);

    for (const Cluster& cluster : clusters) {
        const DepthRange range = cluster_depth_range(model, tiles, cluster, config.sweep);

        // Plan every reference's source groups first so the cluster's whole
        // resident set (and byte budget) is known before any image loads.
        std::vector<RefPlan> plans;
        std::set<int> resident;
        for (int ref_id : cluster.members) {
            RefPlan plan;
            plan.ref_id = ref_id;
            resident.insert(ref_id);
            const Camera ref_cam = model.view_camera(ref_id);
            const std::vector<int> ranked =
                rank_sources(ref_id, cluster, graph, tiles, config.max_sources);
            for (int tile_id : ranked) {
                const int parent = tiles.parent_of(tile_id);
                auto git = std::find_if(plan.groups.begin(), plan.groups.end(),
                                        [&](const auto& g) { return g.first == parent; });
                if (git == plan.groups.end()) {
                    plan.groups.emplace_back(parent, std::vector<int>{tile_id});
                } else if (std::find(git->second.begin(), git->second.end(), tile_id) ==
                           git->second.end()) {
                    git->second.push_back(tile_id);
                }
            }
            // Complete each group with the parent's tiles the warped windows
            // can touch, so a tiled source gathers exactly like the intact
            // image.
            for (auto& [parent, group_tiles] : plan.groups) {
                const Camera frame = parent_frame_camera(model, tiles, group_tiles.front());
                const IntRect rect =
                    warp_bounds(ref_cam, frame, range.min_depth, range.max_depth,
                                config.sweep.window);
                if (!rect.empty()) {
                    for (int candidate : tiles.children.at(parent)) {
                        const TileRecord& rec = tiles.record(candidate);
                        if (rect.intersects(rec.origin_x, rec.origin_y,
                                            rec.origin_x + rec.width,
                                            rec.origin_y + rec.height) &&
                            std::find(group_tiles.begin(), group_tiles.end(), candidate) ==
                                group_tiles.end())
                            group_tiles.push_back(candidate);
                    }
                }
                std::sort(group_tiles.begin(), group_tiles.end());
                for (int t : group_tiles) resident.insert(t);
            }
            result.max_sources_seen = std::max(result.max_sources_seen, plan.groups.size());
            plans.push_back(std::move(plan));
        }

        std::uint64_t budget = 0;
        std::set<std::string> allowed;
        for (int vid : resident) {
            const View& view = model.views.at(vid);
            const Camera cam = model.view_camera(vid);
            budget += resident_cost(cam.width, cam.height, 3);
            allowed.insert((image_root / view.name).string());
        }
        pool.arm(std::move(allowed));

        parallel_for(plans.size(), workers, [&](std::size_t pi) {
            const RefPlan& plan = plans[pi];
            const View& ref_view = model.views.at(plan.ref_id);
            const Camera ref_cam = model.view_camera(plan.ref_id);
            const auto ref_gray = pool.load_gray(image_root / ref_view.name);

            // Stable storage for the cameras the source groups point into.
            std::deque<Camera> cams;
            std::vector<std::shared_ptr<const ImageF32>> grays;
            std::vector<SourceGroup> groups;
            for (const auto& [parent, group_tiles] : plan.groups) {
                SourceGroup group;
                const TileRecord& first = tiles.record(group_tiles.front());
                group.frame_width = first.parent_width;
                group.frame_height = first.parent_height;
                for (int tile_id : group_tiles) {
                    const TileRecord& rec = tiles.record(tile_id);
                    const View& tv = model.views.at(tile_id);
                    cams.push_back(model.view_camera(tile_id));
                    grays.push_back(pool.load_gray(image_root / tv.name));
                    group.tiles.push_back(
                        SourceTile{&cams.back(), grays.back().get(), rec.origin_x, rec.origin_y});
                }
                groups.push_back(std::move(group));
            }

            SweepParams params = config.sweep;
            params.min_depth = range.min_depth;
            params.max_depth = range.max_depth;

            DepthMap depth;
            if (groups.empty()) {
                depth = DepthMap::make(ref_cam.width, ref_cam.height);  // no usable source
            } else {
                SweepStats stats;
                depth = plane_sweep(ref_cam, *ref_gray, groups, params, &stats);
                misses.fetch_add(stats.gather_misses);
            }
            depth.view_id = plan.ref_id;
            write_depth_map(depth, out_dir / "depth" / (view_stem(ref_view.name) + ".sird"));

            ViewMeta meta;
            meta.view_id = plan.ref_id;
            meta.name = ref_view.name;
            meta.min_depth = range.min_depth;
            meta.max_depth = range.max_depth;
            meta.num_hypotheses = params.num_hypotheses;
            std::scoped_lock lock(meta_mutex);
            result.view_meta.push_back(std::move(meta));
        });

        ClusterMemory mem;
        mem.cluster_id = cluster.id;
        mem.budget_bytes = budget;
        mem.peak_bytes = pool.take_peak();
        if (mem.peak_bytes > mem.budget_bytes)
            throw Error("resident image bytes exceeded the cluster budget");
        result.cluster_memory.push_back(mem);
        pool.release_all();
    }

    std::sort(result.view_meta.begin(), result.view_meta.end(),
              [](const ViewMeta& a, const ViewMeta& b) { return a.view_id < b.view_id; });
    result.gather_misses = misses.load();
    return result;
}

// ---------------------------------------------------------------------------
// Filter + fusion stage

void fuse_stage(const SceneModel& model, const TileIndex& tiles,
                const std::vector<Cluster>& clusters, const OverlapGraph& graph,
                const RunConfig& config, const std::filesystem::path& image_root,
                const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "depth_filtered");

    std::map<int, DepthMap> raw;
    std::map<int, Camera> cams;
    for (const auto& [vid, view] : model.views) {
        DepthMap d = read_depth_map(out_dir / "depth" / (view_stem(view.name) + ".sird"));
        d.view_id = vid;
        raw.emplace(vid, std::move(d));
        cams.emplace(vid, model.view_camera(vid));
    }

    std::map<int, const Cluster*> cluster_of;
    for (const Cluster& c : clusters)
        for (int vid : c.members) cluster_of[vid] = &c;

    std::vector<int> view_ids;
    for (const auto& [vid, view] : model.views) view_ids.push_back(vid);

    std::map<int, DepthMap> filtered;
    std::mutex filtered_mutex;
    parallel_for(view_ids.size(), resolve_workers(config), [&](std::size_t k) {
        const int vid = view_ids[k];
        const std::vector<int> neighbors =
            rank_sources(vid, *cluster_of.at(vid), graph, tiles, config.max_sources);
        std::vector<const DepthMap*> nb_depths;
        std::vector<const Camera*> nb_cams;
        for (int nb : neighbors) {
            nb_depths.push_back(&raw.at(nb));
            nb_cams.push_back(&cams.at(nb));
        }
        DepthMap f =
            geometric_consistency_filter(raw.at(vid), cams.at(vid), nb_depths, nb_cams,
                                         config.fuse);
        write_depth_map(f, out_dir / "depth_filtered" /
                               (view_stem(model.views.at(vid).name) + ".sird"));
        std::scoped_lock lock(filtered_mutex);
        filtered.emplace(vid, std::move(f));
    });

    std::vector<FusionView> fusion_views;
    for (int vid : view_ids)
        fusion_views.push_back(FusionView{vid, &cams.at(vid), &filtered.at(vid)});

    // One color image resident at a time during fusion.
    ImagePool pool;
    std::shared_ptr<const ImageU8> current;
    auto loader = [&](int vid) -> std::shared_ptr<const ImageU8> {
        pool.release_all();
        current = pool.load(image_root / model.views.at(vid).name);
        return current;
    };
    const PointCloud cloud = fuse_depth_maps(fusion_views, config.fuse, loader);
    write_point_cloud(cloud, out_dir / "fused.ply");
}

}  // namespace

// ---------------------------------------------------------------------------
// Reconstruct

namespace {

struct WorkingSet {
    SceneModel model;
    TileIndex tiles;
    std::filesystem::path image_root;
};

WorkingSet prepare_working_set(const RunConfig& config, ReconstructMode mode) {
    if (config.model_dir.empty() || config.image_dir.empty() || config.output_dir.empty())
        throw InvalidArgument("reconstruct needs model_dir, image_dir, and output_dir");
    WorkingSet ws;
    switch (mode) {
        case ReconstructMode::Native: {
            ws.model = read_sparse_model(config.model_dir);
            ws.tiles = self_tiles(ws.model);
            ws.image_root = config.image_dir;
            break;
        }
        case ReconstructMode::Sir: {
            RunConfig sub = config;
            sub.output_dir = config.output_dir / "recaptured";
            cmd_recapture(sub);
            ws.model = read_sparse_model(sub.output_dir / "sparse");
            ws.tiles = read_tile_manifest(sub.output_dir / "tiles.txt");
            ws.image_root = sub.output_dir / "images";
            break;
        }
        case ReconstructMode::Downsample: {
            const SceneModel native = read_sparse_model(config.model_dir);
            const auto out = config.output_dir / "downsampled";
            std::filesystem::create_directories(out / "images");
            SceneModel scaled = native;
            std::map<int, std::pair<int, int>> new_dims;
            for (auto& [cam_id, cam] : scaled.cameras) {
                const int longest = std::max(cam.width, cam.height);
                if (longest <= config.max_image_size) {
                    new_dims[cam_id] = {cam.width, cam.height};
                    continue;
                }
                const double scale = static_cast<double>(config.max_image_size) / longest;
                const int ow = std::max(1, static_cast<int>(std::llround(cam.width * scale)));
                const int oh = std::max(1, static_cast<int>(std::llround(cam.height * scale)));
                const double sx = static_cast<double>(ow) / cam.width;
                const double sy = static_cast<double>(oh) / cam.height;
                cam.intrinsics.fx *= sx;
                cam.intrinsics.fy *= sy;
                cam.intrinsics.cx *= sx;
                cam.intrinsics.cy *= sy;
                // k1, k2 act on normalized coordinates, unchanged by scaling.
                cam.width = ow;
                cam.height = oh;
                new_dims[cam_id] = {ow, oh};
            }
            for (const auto& [vid, view] : native.views) {
                const ImageU8 image = read_image(config.image_dir / view.name);
                const auto [ow, oh] = new_dims.at(view.camera_id);
                write_image(resize_area(image, ow, oh), out / "images" / view.name);
            }
            write_sparse_model(scaled, out / "sparse");
            ws.model = std::move(scaled);
            ws.tiles = self_tiles(ws.model);
            ws.image_root = out / "images";
            break;
        }
    }
    return ws;
}

void write_run_meta(const std::filesystem::path& out_dir, ReconstructMode mode,
                    const std::filesystem::path& image_root, int workers,
                    const DepthStageResult& depth) {
    json j;
    j["mode"] = mode_name(mode);
    j["image_root"] = image_root.string();
    j["workers"] = workers;
    j["gather_misses"] = depth.gather_misses;
    j["views"] = json::array();
    for (const ViewMeta& m : depth.view_meta) {
        json v;
        v["id"] = m.view_id;
        v["name"] = m.name;
        v["min_depth"] = m.min_depth;
        v["max_depth"] = m.max_depth;
        v["num_hypotheses"] = m.num_hypotheses;
        j["views"].push_back(std::move(v));
    }
    j["clusters"] = json::array();
    for (const ClusterMemory& c : depth.cluster_memory) {
        json v;
        v["id"] = c.cluster_id;
        v["budget_bytes"] = c.budget_bytes;
        v["peak_bytes"] = c.peak_bytes;
        j["clusters"].push_back(std::move(v));
    }
    std::ofstream out(out_dir / "run_meta.json");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: run_meta.json");
}

json report_to_json(const MemoryReport& r) {
    json j;
    j["native_image_bytes"] = r.native_image_bytes;
    j["tile_bytes"] = r.tile_bytes;
    j["image_buffer_bytes"] = r.image_buffer_bytes;
    j["cost_volume_bytes"] = r.cost_volume_bytes;
    j["output_buffer_bytes"] = r.output_buffer_bytes;
    j["peak_bytes"] = r.peak_bytes;
    j["grid_cells"] = r.grid_cells;
    j["sources"] = r.source_count;
    return j;
}

}  // namespace

ReconstructSummary cmd_reconstruct(const RunConfig& config, ReconstructMode mode) {
    std::filesystem::create_directories(config.output_dir);
    const WorkingSet ws = prepare_working_set(config, mode);
    write_sparse_model(ws.model, config.output_dir / "model");

    const OverlapGraph graph = model_graph(ws.model);
    const auto clusters = cluster_model(graph, config);
    write_clusters(clusters, config.output_dir / "clusters.txt");

    const DepthStageResult depth = depth_stage(ws.model, ws.tiles, clusters, graph, config,
                                               ws.image_root, config.output_dir);
    fuse_stage(ws.model, ws.tiles, clusters, graph, config, ws.image_root, config.output_dir);
    write_run_meta(config.output_dir, mode, ws.image_root, resolve_workers(config), depth);

    ReconstructSummary summary;
    summary.mode = mode;
    summary.cluster_memory = depth.cluster_memory;
    summary.gather_misses = depth.gather_misses;
    for (const ClusterMemory& c : depth.cluster_memory) {
        summary.peak_resident_bytes = std::max(summary.peak_resident_bytes, c.peak_bytes);
        summary.budget_bytes = std::max(summary.budget_bytes, c.budget_bytes);
    }
    for (const auto& [vid, view] : ws.model.views) {
        const Camera cam = ws.model.view_camera(vid);
        summary.total_image_bytes += resident_cost(cam.width, cam.height, 3);
    }

    // Analytic plan at the configured grid and at 1x1, on the native dims.
    const SceneModel native = read_sparse_model(config.model_dir);
    int max_w = 1, max_h = 1;
    for (const auto& [id, cam] : native.cameras) {
        max_w = std::max(max_w, cam.width);
        max_h = std::max(max_h, cam.height);
    }
    const std::size_t sources = std::max<std::size_t>(1, depth.max_sources_seen);
    summary.analytic_grid = estimate_cluster_peak(sources, max_w, max_h, 3, 4, config.grid,
                                                  config.sweep);
    summary.analytic_full =
        estimate_cluster_peak(sources, max_w, max_h, 3, 4, GridSpec{1, 1}, config.sweep);

    json mem;
    mem["analytic"]["grid"] = report_to_json(summary.analytic_grid);
    mem["analytic"]["full"] = report_to_json(summary.analytic_full);
    mem["instrumented"]["peak_resident_bytes"] = summary.peak_resident_bytes;
    mem["instrumented"]["max_cluster_budget_bytes"] = summary.budget_bytes;
    mem["instrumented"]["total_image_bytes_estimate"] = summary.total_image_bytes;
    mem["instrumented"]["per_cluster"] = json::array();
    for (const ClusterMemory& c : depth.cluster_memory) {
        json v;
        v["id"] = c.cluster_id;
        v["budget_bytes"] = c.budget_bytes;
        v["peak_bytes"] = c.peak_bytes;
        mem["instrumented"]["per_cluster"].push_back(std::move(v));
    }
    {
        std::ofstream out(config.output_dir / "memory_report.json");
        out << mem.dump(2) << '\n';
        if (!out) throw IoError("write failed: memory_report.json");
    }

    if (!config.gt_dir.empty()) summary.metrics = cmd_evaluate(config);
    return summary;
}

void cmd_depth(const RunConfig& config) {
    if (config.model_dir.empty() || config.image_dir.empty() || config.output_dir.empty())
        throw InvalidArgument("depth needs model_dir, image_dir, and output_dir");
    const SceneModel model = read_sparse_model(config.model_dir);
    const auto manifest = config.model_dir.parent_path() / "tiles.txt";
    const TileIndex tiles = std::filesystem::exists(manifest) ? read_tile_manifest(manifest)
                                                              : self_tiles(model);
    const OverlapGraph graph = model_graph(model);
    std::vector<Cluster> clusters;
    const auto cluster_file = config.output_dir / "clusters.txt";
    if (std::filesystem::exists(cluster_file)) {
        clusters = read_clusters(cluster_file);
        attach_borrowed_sources(clusters, graph, config.max_sources);
    } else {
        clusters = cluster_model(graph, config);
        std::filesystem::create_directories(config.output_dir);
        write_clusters(clusters, cluster_file);
    }
    const DepthStageResult depth =
        depth_stage(model, tiles, clusters, graph, config, config.image_dir, config.output_dir);
    write_run_meta(config.output_dir, ReconstructMode::Native, config.image_dir,
                   resolve_workers(config), depth);
}

void cmd_fuse(const RunConfig& config) {
    if (config.model_dir.empty() || config.image_dir.empty() || config.output_dir.empty())
        throw InvalidArgument("fuse needs model_dir, image_dir, and output_dir");
    const SceneModel model = read_sparse_model(config.model_dir);
    const auto manifest = config.model_dir.parent_path() / "tiles.txt";
    const TileIndex tiles = std::filesystem::exists(manifest) ? read_tile_manifest(manifest)
                                                              : self_tiles(model);
    const OverlapGraph graph = model_graph(model);
    std::vector<Cluster> clusters = read_clusters(config.output_dir / "clusters.txt");
    attach_borrowed_sources(clusters, graph, config.max_sources);
    fuse_stage(model, tiles, clusters, graph, config, config.image_dir, config.output_dir);
}

// ---------------------------------------------------------------------------
// Evaluation against the synthetic ground truth

namespace {

std::optional<double> median_of(std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    return values[mid];
}

}  // namespace

EvaluateResult cmd_evaluate(const RunConfig& config) {
    if (config.output_dir.empty() || config.gt_dir.empty())
        throw InvalidArgument("evaluate needs output_dir and gt_dir");
    const auto spec_path = config.gt_dir / "scene_spec.json";
    std::ifstream spec_in(spec_path);
    if (!spec_in) throw MissingGroundTruth("missing " + spec_path.string());
    json spec_json;
    spec_in >> spec_json;
    SceneSpec spec;
    spec.seed = spec_json.at("seed").get<std::uint64_t>();
    spec.extent = spec_json.at("extent").get<double>();
    spec.height_amplitude = spec_json.at("height_amplitude").get<double>();
    spec.texture_octaves = spec_json.at("texture_octaves").get<int>();
    const Scene scene(spec);

    const SceneModel model = read_sparse_model(config.output_dir / "model");

    std::map<int, std::pair<double, int>> view_steps;  // id -> (inverse-depth step, hyps)
    {
        std::ifstream meta_in(config.output_dir / "run_meta.json");
        if (!meta_in) throw MissingGroundTruth("missing run_meta.json in the run output");
        json meta;
        meta_in >> meta;
        for (const auto& v : meta.at("views")) {
            const double dmin = v.at("min_depth").get<double>();
            const double dmax = v.at("max_depth").get<double>();
            const int n = v.at("num_hypotheses").get<int>();
            view_steps[v.at("id").get<int>()] = {(1.0 / dmin - 1.0 / dmax) / (n - 1), n};
        }
    }

    EvaluateResult result;
    std::vector<double> pooled;
    const int workers = resolve_workers(config);
    std::vector<int> ids;
    for (const auto& [vid, view] : model.views) ids.push_back(vid);
    std::vector<EvaluateResult::PerView> per_view(ids.size());
    std::vector<std::vector<double>> per_view_errs(ids.size());

    parallel_for(ids.size(), workers, [&](std::size_t k) {
        const int vid = ids[k];
        const View& view = model.views.at(vid);
        const Camera cam = model.view_camera(vid);
        const GroundTruthView gt = render_view(scene, cam);
        const DepthMap est =
            read_depth_map(config.output_dir / "depth" / (view_stem(view.name) + ".sird"));
        if (est.width != cam.width || est.height != cam.height)
            throw DimensionMismatch("depth map does not match camera: " + view.name);

        EvaluateResult::PerView pv;
        pv.view_id = vid;
        pv.name = view.name;
        const auto it = view_steps.find(vid);
        const double inv_step = it != view_steps.end() ? it->second.first : 0.0;
        std::size_t complete = 0;
        for (int y = 0; y < cam.height; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                const double g = gt.depth_at(x, y);
                const float e = est.at(x, y);
                if (g > 0.0) ++pv.gt_valid;
                if (e > 0.0f) ++pv.est_valid;
                if (g > 0.0 && e > 0.0f) {
                    ++pv.compared;
                    per_view_errs[k].push_back(std::abs(static_cast<double>(e) - g));
                    if (inv_step > 0.0 &&
                        std::abs(1.0 / static_cast<double>(e) - 1.0 / g) <= 2.0 * inv_step)
                        ++complete;
                }
            }
        }
        pv.completeness = pv.gt_valid ? static_cast<double>(complete) / pv.gt_valid : 0.0;
        std::vector<double> errs = per_view_errs[k];
        pv.median_abs_err = median_of(errs);
        per_view[k] = std::move(pv);
    });

    double mean_completeness = 0.0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        result.views.push_back(per_view[k]);
        mean_completeness += per_view[k].completeness;
        pooled.insert(pooled.end(), per_view_errs[k].begin(), per_view_errs[k].end());
    }
    result.mean_completeness = ids.empty() ? 0.0 : mean_completeness / ids.size();
    result.pooled_median_abs_err = median_of(pooled);

    const auto ply = config.output_dir / "fused.ply";
    if (std::filesystem::exists(ply)) {
        const PointCloud cloud = read_point_cloud(ply);
        result.cloud_points = cloud.points.size();
        std::vector<double> dists;
        dists.reserve(cloud.points.size());
        for (const auto& p : cloud.points)
            dists.push_back(std::abs(p.position.z() - scene.height(p.position.x(),
                                                                   p.position.y())));
        result.cloud_median_dist = median_of(dists);
    }

    std::ofstream out(config.output_dir / "metrics.json");
    out << metrics_to_json(result) << '\n';
    if (!out) throw IoError("write failed: metrics.json");
    return result;
}

std::string metrics_to_json(const EvaluateResult& result) {
    json j;
    j["views"] = json::array();
    for (const auto& v : result.views) {
        json vj;
        vj["id"] = v.view_id;
        vj["name"] = v.name;
        vj["gt_valid"] = v.gt_valid;
        vj["est_valid"] = v.est_valid;
        vj["compared"] = v.compared;
        if (v.median_abs_err)
            vj["median_abs_depth_err"] = *v.median_abs_err;
        else
            vj["median_abs_depth_err"] = nullptr;
        vj["completeness"] = v.completeness;
        j["views"].push_back(std::move(vj));
    }
    if (result.pooled_median_abs_err)
        j["pooled_median_abs_depth_err"] = *result.pooled_median_abs_err;
    else
        j["pooled_median_abs_depth_err"] = nullptr;
    j["mean_completeness"] = result.mean_completeness;
    if (result.cloud_median_dist)
        j["cloud_median_dist"] = *result.cloud_median_dist;
    else
        j["cloud_median_dist"] = nullptr;
    j["cloud_points"] = result.cloud_points;
    return j.dump(2);
}

MemoryReport cmd_bench(const RunConfig& config, std::ostream& out) {
    const BenchConfig& b = config.bench;
    const MemoryReport full =
        estimate_cluster_peak(static_cast<std::size_t>(b.sources), b.image_width, b.image_height,
                              b.channels, b.bytes_per_sample, GridSpec{1, 1}, config.sweep);
    const MemoryReport grid =
        estimate_cluster_peak(static_cast<std::size_t>(b.sources), b.image_width, b.image_height,
                              b.channels, b.bytes_per_sample, config.grid, config.sweep);
    std::vector<std::pair<std::string, MemoryReport>> rows;
    rows.emplace_back("1x1", full);
    rows.emplace_back(std::to_string(config.grid.cols) + "x" + std::to_string(config.grid.rows),
                      grid);
    print_report_table(rows, out);

    json j;
    j["full"] = report_to_json(full);
    j["grid"] = report_to_json(grid);
    out << j.dump(2) << '\n';

    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        std::ofstream jo(config.output_dir / "bench.json");
        jo << j.dump(2) << '\n';
        if (!jo) throw IoError("write failed: bench.json");
    }
    return grid;
}

}  // namespace sir
