#include "support/fixtures.hpp"

#include <kaplan/error.hpp>
#include <kaplan/geometry.hpp>
#include <kaplan/kdtree.hpp>
#include <kaplan/normals.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace kaplan;

TEST_CASE("normalize_cloud centers the box and scales the largest edge to 1")
{
    PointCloud c;
    c.points = {{0, 0, 0}, {2, 1, 0}, {1, 4, 2}};
    const auto [n, t] = normalize_cloud(c);
    const BoundingBox box = bounding_box(n.points);
    CHECK(box.max_extent() == doctest::Approx(1.0));
    CHECK(box.center().norm() == doctest::Approx(0.0).epsilon(1e-12));
    const PointCloud back = invert_transform(n, t);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK((back.points[i] - c.points[i]).norm() < 1e-12);
    }
}

TEST_CASE("normalize_cloud edge cases")
{
    CHECK_THROWS_AS(normalize_cloud(PointCloud{}), InvalidArgument);
    PointCloud single;
    single.points = {{3, 3, 3}};
    const auto [n, t] = normalize_cloud(single);
    CHECK(t.scale == 1.0);
    CHECK(n.points[0].norm() == 0.0);
}

TEST_CASE("PointCloud::validate rejects non-finite coordinates and count mismatches")
{
    PointCloud c;
    c.points = {{0, 0, std::numeric_limits<double>::quiet_NaN()}};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    PointCloud d;
    d.points = {{0, 0, 0}, {1, 0, 0}};
    d.normals = {{0, 0, 1}};
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
}

TEST_CASE("kd-tree knn and nearest on a tiny fixture")
{
    const std::vector<Point3> pts{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {1, 0, 0}};
    const KdTree tree(pts, 1);
    CHECK(tree.knn({0.9, 0, 0}, 3) == std::vector<std::size_t>{1, 3, 0});
    CHECK(tree.nearest({1, 0, 0}).index == 1);
    CHECK(tree.knn({0, 0, 0}, 4).size() == 4);
    CHECK_THROWS_AS(tree.knn({0, 0, 0}, 5), InvalidArgument);
    CHECK_THROWS_AS(tree.knn({0, 0, 0}, 0), InvalidArgument);
}

TEST_CASE("kd-tree on an empty set")
{
    const KdTree tree(std::vector<Point3>{});
    CHECK_THROWS_AS(tree.knn({0, 0, 0}, 1), InvalidArgument);
    CHECK(tree.box_query({-1, -1, -1}, {1, 1, 1}).empty());
}

TEST_CASE("kd-tree box_query is closed and sorted")
{
    const std::vector<Point3> pts{{0.5, 0, 0}, {-0.5, 0, 0}, {0.6, 0, 0}, {0, 0.5, 0.5}};
    const KdTree tree(pts, 1);
    CHECK(tree.box_query({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}) == std::vector<std::size_t>{0, 1, 3});
}

TEST_CASE("knn on small fixtures")
{
    std::vector<Point3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    CHECK(KdTree(line).knn({1.4, 0, 0}, 2) == std::vector<std::size_t>{1, 2});
    const PointCloud c = fixtures::cube(100, 8);
    CHECK(knn(c, c.points[7], 1) == std::vector<std::size_t>{7});
}

TEST_CASE("PCA normal of a plane patch")
{
    const PointCloud patch = fixtures::plane(200, 0.1, 0.0, 7);
    const NormalEstimate est = estimate_normal(patch.points, Point3(0, 0, 1));
    CHECK_FALSE(est.degenerate);
    CHECK(est.normal.z() == doctest::Approx(1.0).epsilon(1e-9));

    const NormalEstimate down = estimate_normal(patch.points, Point3(0, 0, -1));
    CHECK(down.normal.z() == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("PCA normal of collinear points is degenerate")
{
    const std::vector<Point3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    const NormalEstimate est = estimate_normal(line, Point3(0, 1, 0));
    CHECK(est.degenerate);
    CHECK(est.normal == Vector3::UnitZ());
}

TEST_CASE("estimate_normals on a sphere points outward within 1e-6 of unit length")
{
    const PointCloud s = fixtures::sphere(500, 1.0, 3);
    PointCloud bare;
    bare.points = s.points;
    const NormalEstimationResult r = estimate_normals(bare, 12);
    REQUIRE(r.cloud.normals.size() == s.size());
    std::size_t aligned = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(r.cloud.normals[i].norm() - 1.0) < 1e-6);
        aligned += std::abs(r.cloud.normals[i].dot(s.normals[i])) > 0.9 ? 1 : 0;
    }
    CHECK(aligned > 480);
    CHECK_THROWS_AS(estimate_normals(bare, 2), InvalidArgument);
}
