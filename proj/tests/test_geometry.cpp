// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "sir/geometry.hpp"
#include "test_support.hpp"

using namespace sir;

namespace {

Camera simple_camera(double k1 = 0.0, double k2 = 0.0) {
    Camera cam;
    cam.width = 1000;
    cam.height = 1000;
    cam.intrinsics = {1000.0, 1000.0, 500.0, 500.0, k1, k2};
    return cam;
}

}  // namespace

TEST_CASE("principal ray maps to the principal point") {
    const Camera cam = simple_camera();
    const auto px = project(cam, {0.0, 0.0, 1.0});
    REQUIRE(px);
    CHECK(px->u == 500.0);
    CHECK(px->v == 500.0);
}

TEST_CASE("undistorted projection is linear") {
    const Camera cam = simple_camera();
    const auto px = project(cam, {0.1, 0.2, 1.0});
    REQUIRE(px);
    CHECK(px->u == doctest::Approx(600.0));
    CHECK(px->v == doctest::Approx(700.0));
}

TEST_CASE("radial distortion scales the projection") {
    // r^2 = 0.05, factor 1.005: u = 1000*0.1005 + 500.
    const Camera cam = simple_camera(0.1);
    const auto px = project(cam, {0.1, 0.2, 1.0});
    REQUIRE(px);
    CHECK(px->u == doctest::Approx(600.5).epsilon(1e-12));
    CHECK(px->v == doctest::Approx(701.0).epsilon(1e-12));
}

TEST_CASE("points behind the camera signal instead of projecting") {
    const Camera cam = simple_camera();
    CHECK_FALSE(project(cam, {0.0, 0.0, -1.0}));
    CHECK_FALSE(project(cam, {0.0, 0.0, 0.0}));
    CHECK_FALSE(project(cam, {0.3, -0.2, 1e-10}));
}

TEST_CASE("distort_normalized hand values") {
    Intrinsics intr;
    SUBCASE("identity when undistorted") {
        const Eigen::Vector2d out = distort_normalized(intr, {0.3, -0.4});
        CHECK(out.x() == 0.3);
        CHECK(out.y() == -0.4);
    }
    SUBCASE("origin is a fixed point") {
        intr.k1 = 0.37;
        intr.k2 = -0.11;
        const Eigen::Vector2d out = distort_normalized(intr, {0.0, 0.0});
        CHECK(out.x() == 0.0);
        CHECK(out.y() == 0.0);
    }
    SUBCASE("k1 only, r^2 = 0.25") {
        intr.k1 = 0.1;
        const Eigen::Vector2d out = distort_normalized(intr, {0.3, -0.4});
        CHECK(out.x() == doctest::Approx(0.3075).epsilon(1e-15));
        CHECK(out.y() == doctest::Approx(-0.41).epsilon(1e-15));
    }
}

TEST_CASE("undistort_normalized inverts the forward model") {
    Intrinsics intr;
    SUBCASE("no distortion returns the input unchanged") {
        const auto out = undistort_normalized(intr, {1.7, -2.3});
        REQUIRE(out);
        CHECK(out->x() == 1.7);
        CHECK(out->y() == -2.3);
    }
    SUBCASE("round-trip within 1e-9") {
        intr.k1 = 0.1;
        const Eigen::Vector2d original(0.3, -0.4);
        const Eigen::Vector2d distorted = distort_normalized(intr, original);
        const auto back = undistort_normalized(intr, distorted);
        REQUIRE(back);
        CHECK((*back - original).cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("origin stays fixed") {
        intr.k1 = -0.2;
        intr.k2 = 0.05;
        const auto out = undistort_normalized(intr, {0.0, 0.0});
        REQUIRE(out);
        CHECK(out->norm() == 0.0);
    }
    SUBCASE("far outside the injective domain fails to converge") {
        intr.k1 = -0.5;
        CHECK_FALSE(undistort_normalized(intr, {5.0, 5.0}));
    }
}

TEST_CASE("unproject inverts project") {
    const Camera cam = simple_camera();
    SUBCASE("linear inverse") {
        const auto world = unproject(cam, {600.0, 700.0}, 1.0);
        REQUIRE(world);
        CHECK((*world - Eigen::Vector3d(0.1, 0.2, 1.0)).norm() < 1e-12);
    }
    SUBCASE("principal ray at any depth") {
        for (double d : {0.5, 1.0, 7.25}) {
            const auto world = unproject(cam, {500.0, 500.0}, d);
            REQUIRE(world);
            CHECK((*world - Eigen::Vector3d(0.0, 0.0, d)).norm() < 1e-12);
        }
    }
}

TEST_CASE("project/unproject round-trip on random cameras") {
    std::mt19937_64 rng(20260808);
    for (int trial = 0; trial < 1000; ++trial) {
        const Camera cam = test::random_camera(rng, trial % 2 == 1);
        const Eigen::Vector3d point = test::random_in_frustum_point(rng, cam);
        const auto px = project(cam, point);
        REQUIRE(px);
        const double depth = camera_depth(cam, point);
        REQUIRE(depth > 0.0);
        const auto back = unproject(cam, *px, depth);
        REQUIRE(back);
        CHECK((*back - point).norm() < 1e-8);
    }
}

TEST_CASE("projection is translation-equivariant in the principal point") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> uni(-3000.0, 3000.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Camera cam = test::random_camera(rng, true);
        const Eigen::Vector3d point = test::random_in_frustum_point(rng, cam);
        Camera shifted = cam;
        const double dx = uni(rng);
        const double dy = uni(rng);
        shifted.intrinsics.cx += dx;
        shifted.intrinsics.cy += dy;
        const auto a = project(cam, point);
        const auto b = project(shifted, point);
        REQUIRE(a);
        REQUIRE(b);
        CHECK(std::abs(b->u - (a->u + dx)) < 1e-9);
        CHECK(std::abs(b->v - (a->v + dy)) < 1e-9);
    }
}

TEST_CASE("extrinsics constructors enforce orthonormality") {
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    CHECK_NOTHROW(Extrinsics(rot, Eigen::Vector3d(1, 2, 3)));

    rot(0, 0) = 1.0 + 1e-6;
    CHECK_THROWS_AS(Extrinsics(rot, Eigen::Vector3d::Zero()), InvalidArgument);

    Eigen::Matrix3d mirror = Eigen::Matrix3d::Identity();
    mirror(2, 2) = -1.0;  // orthonormal but det = -1
    CHECK_THROWS_AS(Extrinsics(mirror, Eigen::Vector3d::Zero()), InvalidArgument);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Matrix3d r = test::random_rotation(rng);
        const Extrinsics ext(r, Eigen::Vector3d::Zero());
        const Eigen::Matrix3d gram = ext.rotation.transpose() * ext.rotation;
        CHECK((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(ext.rotation.determinant() - 1.0) <= 1e-12);
    }

    CHECK_THROWS_AS(Extrinsics::from_quaternion(0, 0, 0, 0, Eigen::Vector3d::Zero()),
                    InvalidArgument);
}

TEST_CASE("camera validation rejects bad parameters") {
    Camera cam = simple_camera();
    CHECK_NOTHROW(validate_camera(cam));
    cam.width = 0;
    CHECK_THROWS_AS(validate_camera(cam), InvalidArgument);
    cam = simple_camera();
    cam.intrinsics.fx = -1.0;
    CHECK_THROWS_AS(validate_camera(cam), InvalidArgument);
}
