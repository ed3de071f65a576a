#include "support/fixtures.hpp"

#include <kaplan/error.hpp>
#include <kaplan/point_cloud_io.hpp>

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace kaplan;

TEST_CASE("binary PLY round-trips positions and normals exactly")
{
    const PointCloud s = fixtures::sphere(100, 0.5, 1);
    std::stringstream buf;
    write_ply(buf, s);
    CHECK(read_ply(buf) == s);
}

TEST_CASE("XYZ round-trips exactly with and without normals")
{
    const PointCloud s = fixtures::sphere(50, 0.5, 2);
    std::stringstream a;
    write_xyz(a, s);
    CHECK(read_xyz(a) == s);

    PointCloud bare;
    bare.points = s.points;
    std::stringstream b;
    write_xyz(b, bare);
    CHECK(read_xyz(b) == bare);
}

TEST_CASE("ASCII PLY with float properties and extra elements")
{
    std::istringstream in("ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\n"
                          "property float y\nproperty float z\nproperty uchar red\nelement face 1\n"
                          "property list uchar int vertex_indices\nend_header\n0 1 2 255\n3 4 5 0\n3 0 1 1\n");
    const PointCloud c = read_ply(in);
    REQUIRE(c.size() == 2);
    CHECK(c.points[1] == Point3(3, 4, 5));
    CHECK_FALSE(c.has_normals());
}

TEST_CASE("malformed inputs raise FormatError")
{
    std::istringstream not_ply("hello\n");
    CHECK_THROWS_AS(read_ply(not_ply), FormatError);
    std::istringstream truncated("ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty double x\n"
                                 "property double y\nproperty double z\nend_header\n");
    CHECK_THROWS_AS(read_ply(truncated), FormatError);
    std::istringstream bad_xyz("1 2\n");
    CHECK_THROWS_AS(read_xyz(bad_xyz), FormatError);
}

TEST_CASE("file dispatch on extension")
{
    const auto dir = fixtures::scratch_dir("io");
    const PointCloud s = fixtures::sphere(20, 1.0, 4);
    write_point_cloud(dir / "a.ply", s);
    write_point_cloud(dir / "a.xyz", s);
    CHECK(read_point_cloud(dir / "a.ply") == s);
    CHECK(read_point_cloud(dir / "a.xyz") == s);
    CHECK_THROWS_AS(read_point_cloud(dir / "missing.ply"), IoError);
}
