#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "scenesearch/geometry.hpp"
#include "support/shapes.hpp"

using namespace scenesearch;

namespace {

PointCloud random_cloud(std::mt19937& rng, int n, double span) {
    std::uniform_real_distribution<double> u(-span, span);
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        cloud.points.push_back({u(rng), u(rng), u(rng)});
    }
    return cloud;
}

// Reference nearest neighbor: scan every point, prefer the lowest index on ties.
SpatialIndex::Neighbor brute_nearest_within(const PointCloud& cloud, const Point3& p,
                                            double radius) {
    SpatialIndex::Neighbor best;
    best.index = -1;
    double best_d = radius;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const double d = (cloud.points[i] - p).norm();
        if (d < best_d || (d == best_d && best.index < 0)) {
            best_d = d;
            best.index = static_cast<int>(i);
            best.distance = d;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("normalize_angle maps into [0, 2pi)") {
    CHECK(normalize_angle(0.0) == doctest::Approx(0.0));
    CHECK(normalize_angle(kTwoPi) == doctest::Approx(0.0));
    CHECK(normalize_angle(-0.1) == doctest::Approx(kTwoPi - 0.1));
    CHECK(normalize_angle(7.0) == doctest::Approx(7.0 - kTwoPi));
    CHECK(normalize_angle(-15.0) == doctest::Approx(-15.0 + 3.0 * kTwoPi));
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double t = normalize_angle(u(rng));
        CHECK(t >= 0.0);
        CHECK(t < kTwoPi);
    }
    CHECK_THROWS_AS(normalize_angle(std::nan("")), std::invalid_argument);
}

TEST_CASE("shortest_angular_difference picks the short way around") {
    // Frozen reference: |0.1 - 6.2| = 6.1, the wrap-around gap is 2*pi - 6.1.
    CHECK(shortest_angular_difference(0.1, 6.2) == doctest::Approx(0.183185307179586).epsilon(1e-12));
    CHECK(shortest_angular_difference(0.0, 0.0) == doctest::Approx(0.0));
    CHECK(shortest_angular_difference(0.0, std::numbers::pi) == doctest::Approx(std::numbers::pi));
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng);
        const double b = u(rng);
        const double d = shortest_angular_difference(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= std::numbers::pi + 1e-12);
        CHECK(d == doctest::Approx(shortest_angular_difference(b, a)).epsilon(1e-12));
        CHECK(shortest_angular_difference(a + kTwoPi, b) == doctest::Approx(d).epsilon(1e-9));
    }
}

TEST_CASE("pose yaw is stored normalized") {
    RigidPose2D p(1.0, 2.0, -0.5);
    CHECK(p.theta == doctest::Approx(kTwoPi - 0.5));
    RigidPose2D q(0.0, 0.0, kTwoPi + 1.0);
    CHECK(q.theta == doctest::Approx(1.0));
}

TEST_CASE("pose transform rotates about z and translates in the plane") {
    RigidPose2D pose(0.3, -0.2, std::numbers::pi / 2.0);
    const Transform3 t = Transform3::from_pose2d(pose);
    const Point3 p = t.apply({1.0, 0.0, 0.7});
    CHECK(p.x == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(p.z == doctest::Approx(0.7));
}

TEST_CASE("transform compose and inverse round-trip") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> ang(0.0, kTwoPi);
    for (int i = 0; i < 200; ++i) {
        const Transform3 a = Transform3::from_pose2d({u(rng), u(rng), ang(rng)});
        Transform3 b = look_at({u(rng), u(rng), 2.0 + u(rng)}, {u(rng) * 0.1, u(rng) * 0.1, 0.0});
        const Transform3 ab = a.compose(b);
        const Point3 p{u(rng), u(rng), u(rng)};
        const Point3 via = a.apply(b.apply(p));
        const Point3 direct = ab.apply(p);
        CHECK((via - direct).norm() == doctest::Approx(0.0).epsilon(1e-12));
        const Point3 back = ab.inverse().apply(direct);
        CHECK((back - p).norm() < 1e-9);
    }
}

TEST_CASE("look_at faces the target with z forward") {
    const Transform3 w2c = look_at({0.0, -1.0, 0.5}, {0.0, 0.0, 0.0});
    // Target lands on the optical axis, in front of the camera.
    const Point3 t = w2c.apply({0.0, 0.0, 0.0});
    CHECK(t.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t.z == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
    // A point above the target appears with smaller image y (y grows downward).
    const Point3 up = w2c.apply({0.0, 0.0, 0.2});
    CHECK(up.y < t.y);
    CameraModel cam{500.0, 500.0, 80.0, 60.0, 160, 120, w2c};
    CHECK_NOTHROW(cam.validate());
}

TEST_CASE("camera validation rejects bad parameters") {
    const Transform3 w2c = look_at({0.0, -1.0, 0.5}, {0.0, 0.0, 0.0});
    CameraModel good{500.0, 500.0, 80.0, 60.0, 160, 120, w2c};
    CHECK_NOTHROW(good.validate());

    CameraModel bad = good;
    bad.fx = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = good;
    bad.cx = 160.0;  // must lie strictly inside the image
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = good;
    bad.cy = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = good;
    bad.height = -4;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = good;
    bad.world_to_camera.rotation(0, 0) += 1e-6;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = good;
    bad.world_to_camera.rotation.row(0) *= -1.0;  // reflection: det -1
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("mesh validation enforces indices and non-degenerate area") {
    TriMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    mesh.triangles = {{0, 1, 2}};
    CHECK_NOTHROW(mesh.validate());

    TriMesh out_of_range = mesh;
    out_of_range.triangles = {{0, 1, 3}};
    CHECK_THROWS_AS(out_of_range.validate(), std::invalid_argument);

    TriMesh sliver = mesh;
    sliver.vertices[2] = {2.0, 1e-13, 0.0};
    sliver.triangles = {{0, 1, 2}};
    CHECK_THROWS_AS(sliver.validate(), std::invalid_argument);
}

TEST_CASE("inscribed cylinder hugs the box footprint") {
    const TriMesh mesh = testing::box_mesh(0.06, 0.10, 0.12, 0.01, -0.02);
    const VolumeApprox vol = inscribed_cylinder(mesh);
    CHECK(vol.center_x == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(vol.center_y == doctest::Approx(-0.02).epsilon(1e-12));
    CHECK(vol.radius == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(vol.z_min == doctest::Approx(0.0));
    CHECK(vol.z_max == doctest::Approx(0.12));

    const VolumeApprox unit = inscribed_cylinder(testing::box_mesh(1.0, 1.0, 1.0, 0.5, 0.5));
    CHECK(unit.center_x == doctest::Approx(0.5));
    CHECK(unit.center_y == doctest::Approx(0.5));
    CHECK(unit.radius == doctest::Approx(0.5));
    CHECK(unit.z_min == doctest::Approx(0.0));
    CHECK(unit.z_max == doctest::Approx(1.0));

    const VolumeApprox round = inscribed_cylinder(testing::cylinder_mesh(0.03, 0.1, 64));
    CHECK(round.radius == doctest::Approx(0.03).epsilon(1e-3));
    CHECK(round.center_x == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(round.z_min == doctest::Approx(0.0));
    CHECK(round.z_max == doctest::Approx(0.1));

    TriMesh flat;
    flat.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    flat.triangles = {{0, 1, 2}};
    CHECK_THROWS_AS(inscribed_cylinder(flat), std::invalid_argument);

    TriMesh empty;
    CHECK_THROWS_AS(inscribed_cylinder(empty), std::invalid_argument);
}

TEST_CASE("point_in_volume respects pose and inclusive boundary") {
    VolumeApprox vol;
    vol.center_x = 0.1;
    vol.center_y = 0.0;
    vol.radius = 0.05;
    vol.z_min = 0.0;
    vol.z_max = 0.2;

    const RigidPose2D identity(0.0, 0.0, 0.0);
    CHECK(point_in_volume({0.1, 0.0, 0.1}, vol, identity));
    CHECK(point_in_volume({0.15, 0.0, 0.0}, vol, identity));   // boundary, inclusive
    CHECK(point_in_volume({0.1, 0.05, 0.2}, vol, identity));   // boundary in y and z
    CHECK_FALSE(point_in_volume({0.151, 0.0, 0.1}, vol, identity));
    CHECK_FALSE(point_in_volume({0.1, 0.0, 0.21}, vol, identity));
    CHECK_FALSE(point_in_volume({0.1, 0.0, -0.01}, vol, identity));

    // Quarter turn carries the offset axis from +x to +y.
    const RigidPose2D quarter(0.0, 0.0, std::numbers::pi / 2.0);
    CHECK(point_in_volume({0.0, 0.1, 0.1}, vol, quarter));
    CHECK_FALSE(point_in_volume({0.1, 0.0, 0.1}, vol, quarter));

    // Random oracle: transform the query into the model frame and test there.
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    std::uniform_real_distribution<double> ang(0.0, kTwoPi);
    for (int i = 0; i < 2000; ++i) {
        const RigidPose2D pose(u(rng), u(rng), ang(rng));
        const Point3 p{u(rng), u(rng), u(rng)};
        const Point3 local = Transform3::from_pose2d(pose).inverse().apply(p);
        const double dx = local.x - vol.center_x;
        const double dy = local.y - vol.center_y;
        const bool expect = local.z >= vol.z_min && local.z <= vol.z_max &&
                            dx * dx + dy * dy <= vol.radius * vol.radius;
        CHECK(point_in_volume(p, vol, pose) == expect);
    }
}

TEST_CASE("transform_cloud applies the pose to every point") {
    PointCloud cloud;
    cloud.frame = Frame::world;
    cloud.points = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.5}};
    const PointCloud moved = transform_cloud(cloud, RigidPose2D(1.0, 1.0, std::numbers::pi));
    REQUIRE(moved.size() == 2);
    CHECK(moved.frame == Frame::world);
    CHECK(moved.points[0].x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(moved.points[0].y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(moved.points[1].x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(moved.points[1].y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(moved.points[1].z == doctest::Approx(0.5));
}

TEST_CASE("spatial index matches brute force nearest neighbors") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> span(-0.5, 0.5);
    std::uniform_real_distribution<double> rad(0.0, 0.4);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial * 13 % 400;
        const PointCloud cloud = random_cloud(rng, n, 0.5);
        const SpatialIndex index(cloud);
        REQUIRE(index.size() == cloud.size());
        for (int q = 0; q < 50; ++q) {
            const Point3 p{span(rng), span(rng), span(rng)};
            const double r = rad(rng);
            const auto expect = brute_nearest_within(cloud, p, r);
            const auto got = index.nearest_within(p, r);
            CHECK(got.index == expect.index);
            if (expect.index >= 0) {
                CHECK(got.distance == doctest::Approx(expect.distance).epsilon(1e-12));
            }
            CHECK(index.has_neighbor_within(p, r) == (expect.index >= 0));
        }
    }
}

TEST_CASE("membership at exactly the radius counts as a hit") {
    PointCloud cloud;
    cloud.points = {{0.0, 0.0, 0.0}};
    const SpatialIndex index(cloud);
    CHECK(nearest_within(index, {0.003, 0.0, 0.0}, 0.003));
    CHECK_FALSE(nearest_within(index, {0.0030000001, 0.0, 0.0}, 0.003));
    CHECK(index.nearest_within({0.003, 0.0, 0.0}, 0.003).index == 0);
    CHECK(index.nearest_within({0.0031, 0.0, 0.0}, 0.003).index == -1);
}

TEST_CASE("empty index reports no neighbors") {
    const SpatialIndex index{(PointCloud{})};
    CHECK_FALSE(index.has_neighbor_within({0, 0, 0}, 10.0));
    CHECK(index.nearest_within({0, 0, 0}, 10.0).index == -1);
    const SpatialIndex default_index;
    CHECK_FALSE(default_index.has_neighbor_within({0, 0, 0}, 1.0));
}

TEST_CASE("duplicate points resolve to the lowest index") {
    PointCloud cloud;
    cloud.points = {{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}, {0.2, 0.0, 0.0}};
    const SpatialIndex index(cloud);
    const auto hit = index.nearest_within({0.1, 0.1, 0.1}, 1.0);
    CHECK(hit.index == 0);
    CHECK(hit.distance == doctest::Approx(0.0));
}
