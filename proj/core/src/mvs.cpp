// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include "sir/mvs.hpp"

#include <algorithm>
#include <cmath>

namespace sir {

namespace {

constexpr double kVarianceFloor = 1e-12;  // window variance below this is textureless

struct TileCtx {
    const float* pixels = nullptr;
    int stride = 0;
    long x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // rect inside the source frame
};

// One logical source frame: shared projection parameters plus the resident
// tiles of its pixel data. cx/cy are stored pre-split into integer and
// fractional parts of (frame principal point - 0.5) so the bilinear taps of
// a tiled source land on exactly the same pixels, with exactly the same
// weights, as they would on the intact image.
struct GroupCtx {
    Eigen::Matrix3d rot;
    Eigen::Vector3d trans;
    double fx = 1, fy = 1, k1 = 0, k2 = 0;
    double cx_int = 0, cx_frac = 0;
    double cy_int = 0, cy_frac = 0;
    long frame_w = 0, frame_h = 0;
    std::vector<TileCtx> tiles;
    mutable std::size_t hint = 0;

    const TileCtx* find(long x, long y) const {
        if (hint < tiles.size()) {
            const TileCtx& t = tiles[hint];
            if (x >= t.x0 && x < t.x1 && y >= t.y0 && y < t.y1) return &t;
        }
        for (std::size_t k = 0; k < tiles.size(); ++k) {
            const TileCtx& t = tiles[k];
            if (x >= t.x0 && x < t.x1 && y >= t.y0 && y < t.y1) {
                hint = k;
                return &t;
            }
        }
        return nullptr;
    }

    bool fetch(long x, long y, float& value) const {
        const TileCtx* t = find(x, y);
        if (!t) return false;
        value = t->pixels[(y - t->y0) * t->stride + (x - t->x0)];
        return true;
    }
};

GroupCtx make_group_ctx(const SourceGroup& group) {
    if (group.tiles.empty()) throw InvalidArgument("source group has no tiles");
    GroupCtx ctx;
    const SourceTile& first = group.tiles.front();
    if (!first.camera || !first.image) throw InvalidArgument("source tile missing camera/image");
    ctx.rot = first.camera->extrinsics.rotation;
    ctx.trans = first.camera->extrinsics.translation;
    ctx.fx = first.camera->intrinsics.fx;
    ctx.fy = first.camera->intrinsics.fy;
    ctx.k1 = first.camera->intrinsics.k1;
    ctx.k2 = first.camera->intrinsics.k2;
    ctx.frame_w = group.frame_width > 0 ? group.frame_width : first.camera->width;
    ctx.frame_h = group.frame_height > 0 ? group.frame_height : first.camera->height;

    const double cx_frame = first.camera->intrinsics.cx + first.origin_x;
    const double cy_frame = first.camera->intrinsics.cy + first.origin_y;
    const double cxs = cx_frame - 0.5;
    const double cys = cy_frame - 0.5;
    ctx.cx_int = std::floor(cxs);
    ctx.cx_frac = cxs - ctx.cx_int;
    ctx.cy_int = std::floor(cys);
    ctx.cy_frac = cys - ctx.cy_int;

    for (const SourceTile& tile : group.tiles) {
        if (!tile.camera || !tile.image)
            throw InvalidArgument("source tile missing camera/image");
        if (tile.image->width != tile.camera->width ||
            tile.image->height != tile.camera->height)
            throw DimensionMismatch("source tile image does not match its camera");
        if (std::abs(tile.camera->intrinsics.cx + tile.origin_x - cx_frame) > 1e-6 ||
            std::abs(tile.camera->intrinsics.cy + tile.origin_y - cy_frame) > 1e-6 ||
            tile.camera->intrinsics.fx != ctx.fx || tile.camera->intrinsics.fy != ctx.fy ||
            tile.camera->intrinsics.k1 != ctx.k1 || tile.camera->intrinsics.k2 != ctx.k2)
            throw InvalidArgument("source tiles disagree on the shared frame camera");
        TileCtx t;
        t.pixels = tile.image->data.data();
        t.stride = tile.image->width;
        t.x0 = tile.origin_x;
        t.y0 = tile.origin_y;
        t.x1 = tile.origin_x + tile.image->width;
        t.y1 = tile.origin_y + tile.image->height;
        ctx.tiles.push_back(t);
    }
    return ctx;
}

}  // namespace

std::vector<double> depth_hypotheses(double min_depth, double max_depth, int count) {
    if (!(min_depth > 0.0) || !(min_depth < max_depth))
        throw DegenerateRange("need 0 < min_depth < max_depth");
    if (count < 2) throw InvalidArgument("hypothesis count must be >= 2");
    std::vector<double> depths(static_cast<std::size_t>(count));
    const double q0 = 1.0 / min_depth;
    const double q1 = 1.0 / max_depth;
    const double dq = (q1 - q0) / (count - 1);
    depths.front() = min_depth;
    depths.back() = max_depth;
    for (int i = 1; i + 1 < count; ++i) depths[static_cast<std::size_t>(i)] = 1.0 / (q0 + i * dq);
    return depths;
}

SourceGroup single_source(const Camera& camera, const ImageF32& image) {
    SourceGroup g;
    g.tiles.push_back(SourceTile{&camera, &image, 0, 0});
    g.frame_width = camera.width;
    g.frame_height = camera.height;
    return g;
}

DepthMap plane_sweep(const Camera& ref_camera, const ImageF32& ref_image,
                     const std::vector<SourceGroup>& sources, const SweepParams& params,
                     SweepStats* stats) {
    validate_camera(ref_camera);
    if (sources.empty()) throw NoSources("plane sweep needs at least one source");
    if (params.window < 3 || params.window % 2 == 0)
        throw InvalidArgument("window must be odd and >= 3");
    if (ref_image.width != ref_camera.width || ref_image.height != ref_camera.height)
        throw DimensionMismatch("reference image does not match its camera");

    const std::vector<double> depths =
        depth_hypotheses(params.min_depth, params.max_depth, params.num_hypotheses);

    std::vector<GroupCtx> groups;
    groups.reserve(sources.size());
    for (const auto& g : sources) groups.push_back(make_group_ctx(g));

    const int w = ref_camera.width;
    const int h = ref_camera.height;
    const int hw = params.window / 2;
    const int win = params.window;
    const int taps = win * win;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    // Per-pixel reference data, hypothesis independent: the world-space ray
    // direction scaled so depth d gives the point center + d * ray, and the
    // window sums for NCC.
    const Eigen::Matrix3d ref_rot_t = ref_camera.extrinsics.rotation.transpose();
    const Eigen::Vector3d center = ref_camera.extrinsics.camera_center();
    std::vector<double> ray_x(n), ray_y(n), ray_z(n);
    std::vector<float> ref_sum(n, 0.0f), ref_sum_sq(n, 0.0f);
    std::vector<std::uint8_t> usable(n, 0);

    for (int y = hw; y < h - hw; ++y) {
        for (int x = hw; x < w - hw; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            const Eigen::Vector2d xd(
                ((x + 0.5) - ref_camera.intrinsics.cx) / ref_camera.intrinsics.fx,
                ((y + 0.5) - ref_camera.intrinsics.cy) / ref_camera.intrinsics.fy);
            const auto xn = undistort_normalized(ref_camera.intrinsics, xd);
            if (!xn) continue;
            const Eigen::Vector3d ray = ref_rot_t * Eigen::Vector3d(xn->x(), xn->y(), 1.0);
            ray_x[idx] = ray.x();
            ray_y[idx] = ray.y();
            ray_z[idx] = ray.z();

            float sum = 0.0f, sum_sq = 0.0f;
            for (int dy = -hw; dy <= hw; ++dy) {
                const float* row = ref_image.row(y + dy) + (x - hw);
                for (int dx = 0; dx < win; ++dx) {
                    const float r = row[dx];
                    sum += r;
                    sum_sq += r * r;
                }
            }
            const double var =
                static_cast<double>(taps) * sum_sq - static_cast<double>(sum) * sum;
            if (var < kVarianceFloor * static_cast<double>(taps) * taps) continue;
            ref_sum[idx] = sum;
            ref_sum_sq[idx] = sum_sq;
            usable[idx] = 1;
        }
    }

    std::vector<double> best_cost(n, 0.0);
    std::vector<double> best_depth(n, 0.0);
    std::vector<std::uint8_t> supported(n, 0);
    std::vector<float> costs(groups.size());
    std::uint64_t misses = 0;

    for (const double d : depths) {
        for (int y = hw; y < h - hw; ++y) {
            for (int x = hw; x < w - hw; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * w + x;
                if (!usable[idx]) continue;
                const double wx = center.x() + d * ray_x[idx];
                const double wy = center.y() + d * ray_y[idx];
                const double wz = center.z() + d * ray_z[idx];

                int cost_count = 0;
                for (const GroupCtx& g : groups) {
                    const double pz = g.rot(2, 0) * wx + g.rot(2, 1) * wy + g.rot(2, 2) * wz +
                                      g.trans.z();
                    if (pz <= kBehindEpsilon) continue;
                    const double px = g.rot(0, 0) * wx + g.rot(0, 1) * wy + g.rot(0, 2) * wz +
                                      g.trans.x();
                    const double py = g.rot(1, 0) * wx + g.rot(1, 1) * wy + g.rot(1, 2) * wz +
                                      g.trans.y();
                    const double inv_z = 1.0 / pz;
                    const double xn = px * inv_z;
                    const double yn = py * inv_z;
                    const double r2 = xn * xn + yn * yn;
                    const double scale = 1.0 + r2 * (g.k1 + r2 * g.k2);
                    const double sx = g.fx * (xn * scale);
                    const double sy = g.fy * (yn * scale);

                    // Bilinear center split into an exact integer base and a
                    // fractional weight; identical whether the frame is one
                    // image or a set of tiles.
                    const double tx = sx + g.cx_frac;
                    const double fx_i = std::floor(tx);
                    const long c0 = static_cast<long>(fx_i) + static_cast<long>(g.cx_int);
                    const float fu = static_cast<float>(tx - fx_i);
                    const double ty = sy + g.cy_frac;
                    const double fy_i = std::floor(ty);
                    const long r0 = static_cast<long>(fy_i) + static_cast<long>(g.cy_int);
                    const float fv = static_cast<float>(ty - fy_i);

                    const long rx0 = c0 - hw, rx1 = c0 + hw + 1;
                    const long ry0 = r0 - hw, ry1 = r0 + hw + 1;
                    if (rx0 < 0 || ry0 < 0 || rx1 >= g.frame_w || ry1 >= g.frame_h) continue;

                    const float w00 = (1.0f - fu) * (1.0f - fv);
                    const float w01 = fu * (1.0f - fv);
                    const float w10 = (1.0f - fu) * fv;
                    const float w11 = fu * fv;

                    float sum_s = 0.0f, sum_ss = 0.0f, sum_rs = 0.0f;
                    const TileCtx* tile = g.find(rx0, ry0);
                    if (tile && rx1 < tile->x1 && ry1 < tile->y1) {
                        for (int dy = -hw; dy <= hw; ++dy) {
                            const float* s0 =
                                tile->pixels + (r0 + dy - tile->y0) * tile->stride +
                                (rx0 - tile->x0);
                            const float* s1 = s0 + tile->stride;
                            const float* rrow = ref_image.row(y + dy) + (x - hw);
                            for (int dx = 0; dx < win; ++dx) {
                                const float v = w00 * s0[dx] + w01 * s0[dx + 1] +
                                                w10 * s1[dx] + w11 * s1[dx + 1];
                                const float r = rrow[dx];
                                sum_s += v;
                                sum_ss += v * v;
                                sum_rs += r * v;
                            }
                        }
                    } else {
                        bool ok = true;
                        for (int dy = -hw; dy <= hw && ok; ++dy) {
                            const float* rrow = ref_image.row(y + dy) + (x - hw);
                            for (int dx = 0; dx < win; ++dx) {
                                const long col = rx0 + dx;
                                float v00, v01, v10, v11;
                                if (!g.fetch(col, r0 + dy, v00) ||
                                    !g.fetch(col + 1, r0 + dy, v01) ||
                                    !g.fetch(col, r0 + dy + 1, v10) ||
                                    !g.fetch(col + 1, r0 + dy + 1, v11)) {
                                    ++misses;
                                    ok = false;
                                    break;
                                }
                                const float v = w00 * v00 + w01 * v01 + w10 * v10 + w11 * v11;
                                const float r = rrow[dx];
                                sum_s += v;
                                sum_ss += v * v;
                                sum_rs += r * v;
                            }
                        }
                        if (!ok) continue;
                    }

                    const double var_s = static_cast<double>(taps) * sum_ss -
                                         static_cast<double>(sum_s) * sum_s;
                    if (var_s < kVarianceFloor * static_cast<double>(taps) * taps) continue;
                    const double var_r = static_cast<double>(taps) * ref_sum_sq[idx] -
                                         static_cast<double>(ref_sum[idx]) * ref_sum[idx];
                    const double num = static_cast<double>(taps) * sum_rs -
                                       static_cast<double>(ref_sum[idx]) * sum_s;
                    const double ncc = num / std::sqrt(var_r * var_s);
                    costs[static_cast<std::size_t>(cost_count++)] =
                        static_cast<float>(1.0 - ncc);
                }

                if (cost_count == 0) continue;
                // Ascending-order reduction: the mean is independent of the
                // order sources were enumerated in.
                std::sort(costs.begin(), costs.begin() + cost_count);
                double total = 0.0;
                for (int k = 0; k < cost_count; ++k) total += costs[static_cast<std::size_t>(k)];
                const double mean_cost = total / cost_count;
                if (!supported[idx] || mean_cost < best_cost[idx]) {
                    best_cost[idx] = mean_cost;
                    best_depth[idx] = d;
                    supported[idx] = 1;
                }
            }
        }
    }

    DepthMap out = DepthMap::make(w, h);
    for (std::size_t i = 0; i < n; ++i) {
        if (!supported[i]) continue;
        if (1.0 - best_cost[i] < params.cost_threshold) continue;
        out.depth[i] = static_cast<float>(best_depth[i]);
    }
    if (stats) stats->gather_misses += misses;
    return out;
}

DepthMap geometric_consistency_filter(const DepthMap& ref_depth, const Camera& ref_camera,
                                      const std::vector<const DepthMap*>& neighbor_depths,
                                      const std::vector<const Camera*>& neighbor_cameras,
                                      const FuseParams& params) {
    if (neighbor_depths.size() != neighbor_cameras.size())
        throw InvalidArgument("neighbor depth/camera list size mismatch");
    DepthMap out = DepthMap::make(ref_depth.width, ref_depth.height);
    out.view_id = ref_depth.view_id;
    const int need = params.min_support - 1;

    for (int y = 0; y < ref_depth.height; ++y) {
        for (int x = 0; x < ref_depth.width; ++x) {
            const float d = ref_depth.at(x, y);
            if (d <= 0.0f) continue;
            const PixelCoord px{x + 0.5, y + 0.5};
            const auto world = unproject(ref_camera, px, static_cast<double>(d));
            if (!world) continue;

            int agree = 0;
            for (std::size_t k = 0; k < neighbor_depths.size() && agree < need; ++k) {
                const Camera& nb_cam = *neighbor_cameras[k];
                const DepthMap& nb = *neighbor_depths[k];
                const auto uv = project(nb_cam, *world);
                if (!uv || !in_bounds(*uv, nb.width, nb.height)) continue;
                const int nx = static_cast<int>(uv->u);
                const int ny = static_cast<int>(uv->v);
                const float dn = nb.at(nx, ny);
                if (dn <= 0.0f) continue;
                const double zn = camera_depth(nb_cam, *world);
                if (std::abs(zn - dn) / dn >= params.depth_rel_tol) continue;
                const auto back = unproject(nb_cam, PixelCoord{nx + 0.5, ny + 0.5},
                                            static_cast<double>(dn));
                if (!back) continue;
                const auto round_trip = project(ref_camera, *back);
                if (!round_trip) continue;
                const double err = std::hypot(round_trip->u - px.u, round_trip->v - px.v);
                if (err >= params.reproj_tol) continue;
                ++agree;
            }
            if (agree >= need) out.at(x, y) = d;
        }
    }
    return out;
}

PointCloud fuse_depth_maps(const std::vector<FusionView>& views, const FuseParams& params,
                           const FusionImageLoader& load_image) {
    struct Accum {
        Eigen::Vector3d sum;
        std::array<std::uint8_t, 3> color;
        int support;
    };
    std::vector<Accum> accum;
    std::vector<std::vector<std::int32_t>> claims(views.size());

    for (std::size_t vi = 0; vi < views.size(); ++vi) {
        const FusionView& view = views[vi];
        if (!view.camera || !view.depth) throw InvalidArgument("fusion view missing camera/depth");
        const DepthMap& dm = *view.depth;
        claims[vi].assign(static_cast<std::size_t>(dm.width) * dm.height, -1);
        std::shared_ptr<const ImageU8> image;
        if (load_image) image = load_image(view.view_id);
        if (image && (image->width != dm.width || image->height != dm.height))
            throw DimensionMismatch("fusion color image does not match the depth map");

        for (int y = 0; y < dm.height; ++y) {
            for (int x = 0; x < dm.width; ++x) {
                const float d = dm.at(x, y);
                if (d <= 0.0f) continue;
                const auto world =
                    unproject(*view.camera, PixelCoord{x + 0.5, y + 0.5}, static_cast<double>(d));
                if (!world) continue;

                std::int32_t target = -1;
                for (std::size_t wi = 0; wi < vi && target < 0; ++wi) {
                    const FusionView& prev = views[wi];
                    const auto uv = project(*prev.camera, *world);
                    if (!uv || !in_bounds(*uv, prev.depth->width, prev.depth->height)) continue;
                    const int cx = static_cast<int>(uv->u);
                    const int cy = static_cast<int>(uv->v);
                    const std::int32_t idx =
                        claims[wi][static_cast<std::size_t>(cy) * prev.depth->width + cx];
                    if (idx < 0) continue;
                    const float dn = prev.depth->at(cx, cy);
                    const double zn = camera_depth(*prev.camera, *world);
                    if (std::abs(zn - dn) / dn >= params.depth_rel_tol) continue;
                    const double err = std::hypot(uv->u - (cx + 0.5), uv->v - (cy + 0.5));
                    if (err >= params.reproj_tol) continue;
                    target = idx;
                }

                const std::size_t at = static_cast<std::size_t>(y) * dm.width + x;
                if (target >= 0) {
                    accum[static_cast<std::size_t>(target)].sum += *world;
                    accum[static_cast<std::size_t>(target)].support += 1;
                    claims[vi][at] = target;
                } else {
                    Accum a;
                    a.sum = *world;
                    a.support = 1;
                    if (image)
                        a.color = {image->at(x, y, 0),
                                   image->at(x, y, image->channels > 1 ? 1 : 0),
                                   image->at(x, y, image->channels > 1 ? 2 : 0)};
                    else
                        a.color = {255, 255, 255};
                    claims[vi][at] = static_cast<std::int32_t>(accum.size());
                    accum.push_back(std::move(a));
                }
            }
        }
    }

    PointCloud cloud;
    cloud.points.reserve(accum.size());
    for (const Accum& a : accum) {
        if (a.support < params.min_support) continue;
        PointCloud::Point p;
        p.position = a.sum / a.support;
        p.color = a.color;
        p.support = a.support;
        cloud.points.push_back(std::move(p));
    }
    return cloud;
}

}  // namespace sir
