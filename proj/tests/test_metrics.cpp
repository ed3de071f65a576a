#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <kaplan/error.hpp>
#include <kaplan/kdtree.hpp>
#include <kaplan/metrics.hpp>

#include <doctest.h>

#include <cmath>

using namespace kaplan;

TEST_CASE("chamfer hand examples")
{
    PointCloud a, b;
    a.points = {{0, 0, 0}};
    b.points = {{1, 0, 0}};
    CHECK(chamfer(a, b) == 2.0);
    CHECK(chamfer(a, a) == 0.0);
    CHECK_THROWS_AS(chamfer(a, PointCloud{}), InvalidArgument);
}

TEST_CASE("chamfer and F1 match quadratic oracles")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const PointCloud a = fixtures::cube(300 + seed, seed, -0.1, 0.1);
        const PointCloud b = fixtures::cube(250, seed + 100, -0.1, 0.1);
        CHECK(std::abs(chamfer(a, b, 2) - oracle::chamfer(a, b)) < 1e-12);
        const EvalReport r = f1_score(a, b, 0.02);
        const oracle::F1 o = oracle::f1(a, b, 0.02);
        CHECK(r.accuracy == o.accuracy);
        CHECK(r.completeness == o.completeness);
        CHECK(std::abs(r.f1 - o.f1) < 1e-12);
    }
}

TEST_CASE("chamfer symmetry and duplicates")
{
    const PointCloud a = fixtures::cube(200, 1);
    const PointCloud b = fixtures::cube(150, 2);
    CHECK(std::abs(chamfer(a, b) - chamfer(b, a)) < 1e-15);
    // Nearest distances into a cloud never grow when a point is duplicated.
    PointCloud dup = a;
    dup.points.push_back(a.points[3]);
    const KdTree ta(a.points);
    const KdTree td(dup.points);
    for (const Point3& q : b.points) {
        CHECK(td.nearest(q).distance <= ta.nearest(q).distance);
    }
}

TEST_CASE("F1 constructed fixtures")
{
    PointCloud gt;
    gt.points = {{0, 0, 0}, {1, 0, 0}};
    CHECK(f1_score(gt, gt, 0.01).f1 == 100.0);

    PointCloud far;
    far.points = {{5, 5, 5}};
    const EvalReport zero = f1_score(far, gt, 0.01);
    CHECK(zero.accuracy == 0.0);
    CHECK(zero.completeness == 0.0);
    CHECK(zero.f1 == 0.0);

    PointCloud half = gt;
    half.points.push_back({9, 9, 9});
    half.points.push_back({8, 8, 8});
    const EvalReport r = f1_score(half, gt, 0.01);
    CHECK(r.accuracy == 50.0);
    CHECK(r.completeness == 100.0);
    CHECK(r.f1 == doctest::Approx(66.6667).epsilon(1e-5));

    PointCloud edge;
    edge.points = {{0.01, 0, 0}};
    PointCloud origin;
    origin.points = {{0, 0, 0}};
    CHECK(f1_score(edge, origin, 0.01).accuracy == 100.0); // tau is inclusive
    CHECK_THROWS_AS(f1_score(edge, origin, 0.0), InvalidArgument);
}

TEST_CASE("F1 is monotone in the threshold")
{
    const PointCloud a = fixtures::cube(300, 5, -0.2, 0.2);
    const PointCloud b = fixtures::cube(300, 6, -0.2, 0.2);
    double acc = -1, comp = -1;
    for (double tau = 0.005; tau < 0.2; tau *= 1.5) {
        const EvalReport r = f1_score(a, b, tau);
        CHECK(r.accuracy >= acc);
        CHECK(r.completeness >= comp);
        acc = r.accuracy;
        comp = r.completeness;
    }
}

TEST_CASE("hole-only report")
{
    const PointCloud complete = fixtures::sphere(800, 0.5, 3);
    PointCloud missing, incomplete;
    for (std::size_t i = 0; i < complete.size(); ++i) {
        (complete.points[i].z() > 0.35 ? missing : incomplete).points.push_back(complete.points[i]);
    }
    const EvalReport exact = hole_region_report(missing, complete, missing, 0.01);
    CHECK(exact.f1 == 100.0);
    CHECK(exact.region == EvalRegion::hole_only);

    const EvalReport none = hole_region_report(incomplete, complete, missing, 0.01);
    CHECK(none.empty_restriction);
    CHECK(std::isnan(none.chamfer));
    CHECK(none.completeness == 0.0);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PointCloud pred = incomplete;
        const PointCloud extra = fixtures::sphere(100, 0.5 + 0.001 * static_cast<double>(seed), seed + 50);
        pred.points.insert(pred.points.end(), extra.points.begin(), extra.points.end());
        const EvalReport r = hole_region_report(pred, complete, missing, 0.05);
        const PointCloud restricted = oracle::hole_restriction(pred, complete, missing);
        REQUIRE_FALSE(restricted.empty());
        const oracle::F1 o = oracle::f1(restricted, missing, 0.05);
        CHECK(r.pred_count == restricted.size());
        CHECK(r.accuracy == o.accuracy);
        CHECK(r.completeness == o.completeness);
        CHECK(std::abs(r.chamfer - oracle::chamfer(restricted, missing)) < 1e-12);
    }
}
