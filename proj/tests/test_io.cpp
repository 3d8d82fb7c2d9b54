#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>
#include <stdexcept>

#include "scenesearch/geometry.hpp"
#include "scenesearch/io.hpp"

using namespace scenesearch;

TEST_CASE("point cloud round-trips through the ascii format") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    PointCloud cloud;
    cloud.frame = Frame::world;
    for (int i = 0; i < 257; ++i) {
        cloud.points.push_back({u(rng), u(rng), u(rng)});
    }
    std::stringstream buf;
    write_pcd(buf, cloud);
    const PointCloud back = read_pcd(buf);
    REQUIRE(back.size() == cloud.size());
    CHECK(back.frame == Frame::world);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(back.points[i].x == cloud.points[i].x);  // full-precision text
        CHECK(back.points[i].y == cloud.points[i].y);
        CHECK(back.points[i].z == cloud.points[i].z);
    }
}

TEST_CASE("empty cloud round-trips") {
    PointCloud cloud;
    std::stringstream buf;
    write_pcd(buf, cloud);
    const PointCloud back = read_pcd(buf);
    CHECK(back.empty());
    CHECK(back.frame == Frame::camera);
}

TEST_CASE("frame comment defaults to camera when absent") {
    std::stringstream buf(
        "VERSION .7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n"
        "WIDTH 2\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 2\nDATA ascii\n"
        "0 0 1\n0.5 -0.5 2\n");
    const PointCloud cloud = read_pcd(buf);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.frame == Frame::camera);
    CHECK(cloud.points[1].x == doctest::Approx(0.5));
    CHECK(cloud.points[1].z == doctest::Approx(2.0));
}

TEST_CASE("cloud reader rejects malformed input") {
    std::stringstream no_data("VERSION .7\nFIELDS x y z\nPOINTS 1\n");
    CHECK_THROWS_AS(read_pcd(no_data), std::runtime_error);

    std::stringstream bad_fields(
        "FIELDS x y z rgb\nPOINTS 0\nDATA ascii\n");
    CHECK_THROWS_AS(read_pcd(bad_fields), std::runtime_error);

    std::stringstream binary(
        "FIELDS x y z\nPOINTS 0\nDATA binary\n");
    CHECK_THROWS_AS(read_pcd(binary), std::runtime_error);

    std::stringstream truncated(
        "FIELDS x y z\nPOINTS 3\nDATA ascii\n0 0 0\n1 1 1\n");
    CHECK_THROWS_AS(read_pcd(truncated), std::runtime_error);

    std::stringstream garbage_point(
        "FIELDS x y z\nPOINTS 1\nDATA ascii\n0 zero 0\n");
    CHECK_THROWS_AS(read_pcd(garbage_point), std::runtime_error);
}

TEST_CASE("obj reader handles the common face token forms") {
    std::stringstream buf(
        "# comment\n"
        "v 0 0 0\n"
        "v 1 0 0\n"
        "v 0 1 0\n"
        "v 0 0 1\n"
        "vn 0 0 1\n"
        "vt 0.5 0.5\n"
        "f 1 2 3\n"
        "f 1/1 2/2 4/1\n"
        "f 2//1 3//1 4//1\n"
        "f 1/1/1 3/2/1 4/1/1\n"
        "f -4 -3 -2\n");
    const TriMesh mesh = read_obj(buf);
    REQUIRE(mesh.vertices.size() == 4);
    REQUIRE(mesh.triangles.size() == 5);
    CHECK(mesh.triangles[0] == std::array<int, 3>{0, 1, 2});
    CHECK(mesh.triangles[1] == std::array<int, 3>{0, 1, 3});
    CHECK(mesh.triangles[2] == std::array<int, 3>{1, 2, 3});
    CHECK(mesh.triangles[4] == std::array<int, 3>{0, 1, 2});  // negative = relative
}

TEST_CASE("obj reader rejects quads and bad indices") {
    std::stringstream quad("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    CHECK_THROWS_AS(read_obj(quad), std::runtime_error);

    std::stringstream out_of_range("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n");
    CHECK_THROWS_AS(read_obj(out_of_range), std::runtime_error);

    std::stringstream zero_index("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
    CHECK_THROWS_AS(read_obj(zero_index), std::runtime_error);

    std::stringstream degenerate("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n");
    CHECK_THROWS_AS(read_obj(degenerate), std::invalid_argument);
}

TEST_CASE("obj writer round-trips a mesh") {
    TriMesh mesh;
    mesh.vertices = {{0, 0, 0}, {0.1, 0, 0}, {0, 0.1, 0}, {0, 0, 0.1}};
    mesh.triangles = {{0, 1, 2}, {0, 1, 3}, {1, 2, 3}};
    std::stringstream buf;
    write_obj(buf, mesh);
    const TriMesh back = read_obj(buf);
    REQUIRE(back.vertices.size() == mesh.vertices.size());
    REQUIRE(back.triangles.size() == mesh.triangles.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        CHECK(back.vertices[i].x == mesh.vertices[i].x);
        CHECK(back.vertices[i].y == mesh.vertices[i].y);
        CHECK(back.vertices[i].z == mesh.vertices[i].z);
    }
    CHECK(back.triangles == mesh.triangles);
}

TEST_CASE("camera json round-trips and validates") {
    CameraModel cam;
    cam.fx = 525.5;
    cam.fy = 524.25;
    cam.cx = 79.5;
    cam.cy = 59.5;
    cam.width = 160;
    cam.height = 120;
    cam.world_to_camera = look_at({0.2, -0.9, 0.6}, {0.0, 0.0, 0.05});
    const std::string text = camera_to_json_text(cam);
    const CameraModel back = camera_from_json_text(text);
    CHECK(back.fx == cam.fx);
    CHECK(back.fy == cam.fy);
    CHECK(back.cx == cam.cx);
    CHECK(back.cy == cam.cy);
    CHECK(back.width == cam.width);
    CHECK(back.height == cam.height);
    CHECK((back.world_to_camera.rotation - cam.world_to_camera.rotation).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
    CHECK((back.world_to_camera.translation - cam.world_to_camera.translation)
              .cwiseAbs()
              .maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("camera json rejects invalid parameters") {
    CHECK_THROWS(camera_from_json_text("{\"fx\": 1}"));
    CHECK_THROWS(camera_from_json_text(
        "{\"fx\":500,\"fy\":500,\"cx\":80,\"cy\":60,\"width\":160,\"height\":120,"
        "\"world_to_camera\":{\"rotation\":[1,0,0,0,1,0,0,0],\"translation\":[0,0,0]}}"));
    // Non-orthonormal rotation.
    CHECK_THROWS(camera_from_json_text(
        "{\"fx\":500,\"fy\":500,\"cx\":80,\"cy\":60,\"width\":160,\"height\":120,"
        "\"world_to_camera\":{\"rotation\":[2,0,0,0,1,0,0,0,1],\"translation\":[0,0,0]}}"));
}

TEST_CASE("file loaders report the path on failure") {
    CHECK_THROWS_AS(load_pcd("/nonexistent/file.pcd"), std::runtime_error);
    CHECK_THROWS_AS(load_obj("/nonexistent/file.obj"), std::runtime_error);
    CHECK_THROWS_AS(load_camera_json("/nonexistent/camera.json"), std::runtime_error);
}
