// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <random>

#include "sir/model_io.hpp"
#include "test_support.hpp"

using namespace sir;

namespace {

SceneModel two_camera_model() {
    SceneModel model;
    Camera pinhole;
    pinhole.width = 1000;
    pinhole.height = 800;
    pinhole.intrinsics = {1000.0, 1001.5, 500.25, 400.125, 0.0, 0.0};
    model.cameras.emplace(1, pinhole);

    Camera radial;
    radial.width = 2060;
    radial.height = 1540;
    radial.intrinsics = {9000.0, 9000.0, -3090.0, -2310.0, 0.0387, -0.00121};
    model.cameras.emplace(2, radial);

    std::mt19937_64 rng(17);
    View a;
    a.camera_id = 1;
    a.name = "alpha.ppm";
    a.pose = Extrinsics(test::random_rotation(rng), {0.125, -3.5, 2.25});
    model.views.emplace(1, a);

    View b;
    b.camera_id = 2;
    b.name = "bravo_s4_4.ppm";
    b.pose = Extrinsics(test::random_rotation(rng), {1.0 / 3.0, 0.7071067811865476, -9.0});
    model.views.emplace(7, b);

    SparsePoint pt;
    pt.position = {1.5, -2.25, 17.0 / 7.0};
    pt.color = {12, 200, 255};
    pt.view_ids = {1, 7};
    model.points.push_back(pt);
    model.points.push_back(SparsePoint{{0.0, 0.0, 5.0}, {0, 0, 0}, {7}});
    return model;
}

}  // namespace

TEST_CASE("cameras.txt line parses into a pinhole camera") {
    const auto dir = test::scratch_dir("model_io_pinhole");
    {
        std::ofstream cams(dir / "cameras.txt");
        cams << "# comment line\n";
        cams << "1 PINHOLE 1000 1000 1000.0 1000.0 500.0 500.0\n";
        std::ofstream imgs(dir / "images.txt");
        imgs << "1 1 0 0 0 0 0 0 1 a.ppm\n\n";
    }
    const SceneModel model = read_sparse_model(dir);
    const Camera& cam = model.cameras.at(1);
    CHECK(cam.intrinsics.fx == 1000.0);
    CHECK(cam.intrinsics.fy == 1000.0);
    CHECK(cam.intrinsics.cx == 500.0);
    CHECK(cam.intrinsics.cy == 500.0);
    CHECK(cam.intrinsics.k1 == 0.0);
    CHECK(cam.width == 1000);
    CHECK(cam.height == 1000);

    // Identity quaternion, zero translation.
    const View& view = model.views.at(1);
    CHECK((view.pose.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(view.pose.translation.norm() == 0.0);

    CHECK(model.points.empty());  // points3D.txt absent is fine
}

TEST_CASE("empty points3D.txt yields an empty point list") {
    const auto dir = test::scratch_dir("model_io_empty_points");
    {
        std::ofstream cams(dir / "cameras.txt");
        cams << "1 PINHOLE 10 10 5 5 5 5\n";
        std::ofstream imgs(dir / "images.txt");
        std::ofstream pts(dir / "points3D.txt");
        pts << "# nothing here\n";
    }
    const SceneModel model = read_sparse_model(dir);
    CHECK(model.points.empty());
}

TEST_CASE("unsupported camera kinds and malformed lines raise typed errors") {
    const auto dir = test::scratch_dir("model_io_bad");
    {
        std::ofstream cams(dir / "cameras.txt");
        cams << "1 OPENCV_FISHEYE 10 10 1 1 5 5 0 0 0 0\n";
    }
    CHECK_THROWS_AS(read_sparse_model(dir), UnsupportedCameraKind);
    {
        std::ofstream cams(dir / "cameras.txt");
        cams << "1 PINHOLE 10 10 1\n";
    }
    CHECK_THROWS_AS(read_sparse_model(dir), ParseError);
    {
        std::ofstream cams(dir / "cameras.txt");
        cams << "1 PINHOLE 10 10 1 1 bogus 5\n";
    }
    CHECK_THROWS_AS(read_sparse_model(dir), ParseError);
    CHECK_THROWS_AS(read_sparse_model(test::scratch_dir("model_io_missing")), MissingFile);
}

TEST_CASE("sparse model round-trips field-exact") {
    const SceneModel model = two_camera_model();
    const auto dir = test::scratch_dir("model_io_roundtrip");
    write_sparse_model(model, dir);
    const SceneModel back = read_sparse_model(dir);

    REQUIRE(back.cameras.size() == 2);
    REQUIRE(back.views.size() == 2);
    REQUIRE(back.points.size() == 2);
    for (const auto& [id, cam] : model.cameras) {
        const Camera& rt = back.cameras.at(id);
        CHECK(rt.intrinsics.fx == cam.intrinsics.fx);
        CHECK(rt.intrinsics.fy == cam.intrinsics.fy);
        CHECK(rt.intrinsics.cx == cam.intrinsics.cx);  // negative cx round-trips exactly
        CHECK(rt.intrinsics.cy == cam.intrinsics.cy);
        CHECK(rt.intrinsics.k1 == cam.intrinsics.k1);
        CHECK(rt.intrinsics.k2 == cam.intrinsics.k2);
        CHECK(rt.width == cam.width);
        CHECK(rt.height == cam.height);
    }
    for (const auto& [id, view] : model.views) {
        const View& rt = back.views.at(id);
        CHECK(rt.camera_id == view.camera_id);
        CHECK(rt.name == view.name);
        CHECK((rt.pose.rotation - view.pose.rotation).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((rt.pose.translation - view.pose.translation).cwiseAbs().maxCoeff() < 1e-9);
    }
    for (std::size_t i = 0; i < model.points.size(); ++i) {
        CHECK(back.points[i].position == model.points[i].position);
        CHECK(back.points[i].color == model.points[i].color);
        CHECK(back.points[i].view_ids == model.points[i].view_ids);
    }
}

TEST_CASE("empty model writes three header-only files") {
    const auto dir = test::scratch_dir("model_io_empty");
    write_sparse_model(SceneModel{}, dir);
    const SceneModel back = read_sparse_model(dir);
    CHECK(back.cameras.empty());
    CHECK(back.views.empty());
    CHECK(back.points.empty());
}

TEST_CASE("distorted cameras with fx != fy cannot serialize") {
    SceneModel model;
    Camera cam;
    cam.width = 10;
    cam.height = 10;
    cam.intrinsics = {100.0, 101.0, 5.0, 5.0, 0.1, 0.0};
    model.cameras.emplace(1, cam);
    CHECK_THROWS_AS(write_sparse_model(model, test::scratch_dir("model_io_fxfy")),
                    UnsupportedCameraKind);
}

TEST_CASE("pixmaps round-trip bit-exactly") {
    const auto dir = test::scratch_dir("model_io_pnm");
    std::mt19937_64 rng(8);
    SUBCASE("P6 color") {
        ImageU8 img = ImageU8::make(64, 48, 3);
        for (auto& b : img.data) b = static_cast<std::uint8_t>(rng());
        write_image(img, dir / "c.ppm");
        const ImageU8 back = read_image(dir / "c.ppm");
        CHECK(back.channels == 3);
        CHECK(back.data == img.data);
    }
    SUBCASE("P5 single black pixel") {
        const ImageU8 img = ImageU8::make(1, 1, 1, 0);
        write_image(img, dir / "g.pgm");
        const ImageU8 back = read_image(dir / "g.pgm");
        CHECK(back.width == 1);
        CHECK(back.height == 1);
        CHECK(back.channels == 1);
        CHECK(back.data[0] == 0);
    }
}

TEST_CASE("truncated and malformed pixmaps raise ParseError") {
    const auto dir = test::scratch_dir("model_io_pnm_bad");
    {
        std::ofstream out(dir / "trunc.ppm", std::ios::binary);
        out << "P6\n10 10\n255\nabc";  // far fewer than 300 bytes
    }
    CHECK_THROWS_AS(read_image(dir / "trunc.ppm"), ParseError);
    {
        std::ofstream out(dir / "maxval.pgm", std::ios::binary);
        out << "P5\n2 2\n65535\n\0\0\0\0\0\0\0\0";
    }
    CHECK_THROWS_AS(read_image(dir / "maxval.pgm"), UnsupportedFormat);
    {
        std::ofstream out(dir / "magic.ppm", std::ios::binary);
        out << "P3\n1 1\n255\n0 0 0\n";
    }
    CHECK_THROWS_AS(read_image(dir / "magic.ppm"), UnsupportedFormat);
    CHECK_THROWS_AS(read_image(dir / "absent.ppm"), MissingFile);
}

TEST_CASE("pixmap headers may carry comments") {
    const auto dir = test::scratch_dir("model_io_pnm_comment");
    {
        std::ofstream out(dir / "c.pgm", std::ios::binary);
        out << "P5\n# generated\n2 1\n# another\n255\n";
        out.put(7);
        out.put(250);
    }
    const ImageU8 img = read_image(dir / "c.pgm");
    CHECK(img.width == 2);
    CHECK(img.data[0] == 7);
    CHECK(img.data[1] == 250);
}

TEST_CASE("SIRD depth maps round-trip bit-exactly") {
    const auto dir = test::scratch_dir("model_io_sird");
    DepthMap d = DepthMap::make(33, 21);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<float> uni(0.1f, 100.0f);
    for (std::size_t i = 0; i < d.depth.size(); ++i)
        d.depth[i] = (i % 5 == 0) ? 0.0f : uni(rng);
    write_depth_map(d, dir / "d.sird");
    const DepthMap back = read_depth_map(dir / "d.sird");
    CHECK(back.width == d.width);
    CHECK(back.height == d.height);
    CHECK(back.depth == d.depth);
    CHECK(back.valid_count() == d.valid_count());

    {
        std::ofstream out(dir / "bad.sird", std::ios::binary);
        out << "SIRX";
    }
    CHECK_THROWS_AS(read_depth_map(dir / "bad.sird"), ParseError);
    {
        std::ofstream out(dir / "short.sird", std::ios::binary);
        out << "SIRD";
        const std::uint32_t v = 8;
        out.write(reinterpret_cast<const char*>(&v), 4);
        out.write(reinterpret_cast<const char*>(&v), 4);
    }
    CHECK_THROWS_AS(read_depth_map(dir / "short.sird"), ParseError);
}

TEST_CASE("point clouds serialize as ASCII PLY") {
    const auto dir = test::scratch_dir("model_io_ply");
    SUBCASE("empty cloud") {
        write_point_cloud(PointCloud{}, dir / "empty.ply");
        std::ifstream in(dir / "empty.ply");
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        CHECK(text.find("element vertex 0") != std::string::npos);
        const PointCloud back = read_point_cloud(dir / "empty.ply");
        CHECK(back.points.empty());
    }
    SUBCASE("single white point") {
        PointCloud cloud;
        cloud.points.push_back({{1.0, 2.0, 3.0}, {255, 255, 255}, 1});
        write_point_cloud(cloud, dir / "one.ply");
        std::ifstream in(dir / "one.ply");
        std::string line;
        std::string last;
        while (std::getline(in, line))
            if (!line.empty()) last = line;
        CHECK(last == "1 2 3 255 255 255");
    }
    SUBCASE("ten points re-parse with exact coordinates") {
        PointCloud cloud;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> uni(-50.0, 50.0);
        for (int i = 0; i < 10; ++i)
            cloud.points.push_back({{uni(rng), uni(rng), uni(rng)},
                                    {static_cast<std::uint8_t>(i * 20),
                                     static_cast<std::uint8_t>(255 - i),
                                     static_cast<std::uint8_t>(i)},
                                    2});
        write_point_cloud(cloud, dir / "ten.ply");
        const PointCloud back = read_point_cloud(dir / "ten.ply");
        REQUIRE(back.points.size() == 10);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(back.points[i].position == cloud.points[i].position);
            CHECK(back.points[i].color == cloud.points[i].color);
        }
    }
}

TEST_CASE("format_double survives the text round-trip") {
    for (double v : {0.0, 1.0, -3090.0, 1.0 / 3.0, 6.02214076e23, 2.2250738585072014e-308}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}
