#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <kaplan/completion.hpp>
#include <kaplan/descriptor.hpp>
#include <kaplan/error.hpp>

#include <doctest.h>

#include <random>

using namespace kaplan;

TEST_CASE("collect_box_neighbors matches a linear scan")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const PointCloud c = fixtures::cube(300, seed);
        const KdTree tree(c.points);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1, 1);
        const Point3 q(u(rng), u(rng), u(rng));
        const double side = 0.2 + 0.1 * static_cast<double>(seed % 10);
        CHECK(collect_box_neighbors(tree, q, side) == oracle::box_neighbors(c.points, q, side));
    }
}

TEST_CASE("box boundary is inclusive in Chebyshev distance")
{
    PointCloud c;
    c.points = {{0.5, 0, 0}, {0.5000001, 0, 0}, {0.3, -0.5, 0.5}};
    CHECK(collect_box_neighbors(c, Point3::Zero(), 1.0) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("aggregate_cell_depths examples")
{
    const std::vector<double> a{0.0100, 0.0105, 0.0500};
    const DepthCluster ca = aggregate_cell_depths(a, 0.001);
    CHECK(ca.members == std::vector<std::size_t>{0, 1});
    CHECK(ca.mean_depth == doctest::Approx(0.01025));

    const std::vector<double> single{-0.3};
    CHECK(aggregate_cell_depths(single, 0.001).mean_depth == -0.3);

    // Smallest magnitude first, regardless of sign.
    const std::vector<double> b{0.2, -0.01, 0.21};
    CHECK(aggregate_cell_depths(b, 0.001).members == std::vector<std::size_t>{1});

    CHECK_THROWS_AS(aggregate_cell_depths(std::vector<double>{}, 0.001), InvalidArgument);
}

TEST_CASE("aggregate_cell_depths matches the selection-order oracle")
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        std::uniform_int_distribution<int> len(1, 12);
        std::uniform_real_distribution<double> d(-0.01, 0.01);
        std::vector<double> depths(static_cast<std::size_t>(len(rng)));
        for (double& x : depths) {
            x = d(rng);
        }
        const DepthCluster got = aggregate_cell_depths(depths, 0.004);
        const oracle::Cluster want = oracle::aggregate(depths, 0.004);
        CHECK(got.members == want.members);
        CHECK(got.mean_depth == want.mean);
    }
}

TEST_CASE("valid flags: barycenter test and 8-neighbour rescue")
{
    PlaneFrame f;
    f.resolution = 5;
    f.side_length = 5.0; // unit cells
    std::vector<CellProjection> cells(25);
    auto at = [&](int i, int j) -> CellProjection& { return cells[static_cast<std::size_t>(i * 5 + j)]; };
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            at(i, j).barycenter = f.cell_center(i, j);
        }
    }
    // Three centered cells around (2, 2); (2, 2) itself is off-center.
    at(1, 1).count = 1;
    at(1, 2).count = 1;
    at(1, 3).count = 1;
    at(2, 2).count = 1;
    at(2, 2).barycenter += Eigen::Vector2d(0.45, 0.0);
    // Off-center with fewer than three valid neighbours.
    at(4, 4).count = 1;
    at(4, 4).barycenter += Eigen::Vector2d(0.45, 0.0);
    // Exactly on the radius counts as centered.
    at(4, 0).count = 1;
    at(4, 0).barycenter += Eigen::Vector2d(0.0, 0.4);

    const ChannelImage v = attribute_valid_flags(f, cells, 0.4);
    CHECK(v.at(1, 1) == 1.0);
    CHECK(v.at(2, 2) == 1.0);
    CHECK(v.at(4, 4) == 0.0);
    CHECK(v.at(4, 0) == 1.0);
    CHECK(v.at(3, 3) == 0.0); // empty cells stay invalid
}

TEST_CASE("single point descriptor: project then lift recovers the point")
{
    PointCloud c;
    c.points = {{0.013, -0.021, 0.004}};
    KaplanConfig cfg;
    cfg.resolution = 35;
    cfg.side_length = 0.1;
    const Point3 q = Point3::Zero();
    const KaplanDescriptor d = build_kaplan(c, q, cfg);
    REQUIRE(d.num_planes() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const PlaneFrame& f = d.planes[k];
        const Vector3 uvd = f.project(c.points[0]);
        const auto cell = f.cell_of(uvd.x(), uvd.y());
        REQUIRE(cell);
        // A single projection is valid only if near the cell center; check the lift either way.
        const Point3 lifted = lift_cell(f, cell->first, cell->second, uvd.z());
        const Vector3 delta = f.project(lifted) - uvd;
        CHECK(std::abs(delta.z()) < 1e-9);
        CHECK(std::hypot(delta.x(), delta.y()) <= 0.5 * std::sqrt(2.0) * f.cell_size() + 1e-12);
        if (d.value(k, Channel::valid, cell->first, cell->second) == 1.0) {
            CHECK(d.value(k, Channel::depth, cell->first, cell->second) == doctest::Approx(uvd.z()).epsilon(1e-12));
        }
    }
}

TEST_CASE("descriptor of a sphere: zeros outside valid cells and unit local normals")
{
    const PointCloud s = fixtures::sphere(4000, 0.5, 9);
    const IndexedCloud idx(s);
    KaplanConfig cfg;
    cfg.side_length = 0.3;
    const KaplanDescriptor d = build_kaplan(idx, s.points[0], cfg, 0);
    d.validate_layout();
    CHECK(d.has_normals());
    std::size_t valid = 0;
    for (std::size_t k = 0; k < d.num_planes(); ++k) {
        for (int i = 0; i < d.resolution; ++i) {
            for (int j = 0; j < d.resolution; ++j) {
                if (d.value(k, Channel::valid, i, j) == 1.0) {
                    ++valid;
                    CHECK(std::abs(d.local_normal(k, i, j).norm() - 1.0) < 1e-9);
                    CHECK(std::abs(d.value(k, Channel::depth, i, j)) <= 0.15 + 1e-12);
                } else {
                    CHECK(d.value(k, Channel::valid, i, j) == 0.0);
                    CHECK(d.value(k, Channel::depth, i, j) == 0.0);
                    CHECK(d.local_normal(k, i, j).norm() == 0.0);
                }
            }
        }
    }
    CHECK(valid > 100);
}

TEST_CASE("world normals of a sphere descriptor point along the surface normal")
{
    const PointCloud s = fixtures::sphere(6000, 0.5, 10);
    const IndexedCloud idx(s);
    KaplanConfig cfg;
    cfg.side_length = 0.2;
    const KaplanDescriptor d = build_kaplan(idx, s.points[5], cfg, 5);
    const int c = d.resolution / 2;
    for (std::size_t k = 0; k < d.num_planes(); ++k) {
        if (d.value(k, Channel::valid, c, c) == 1.0) {
            const Point3 p = lift_cell(d.planes[k], c, c, d.value(k, Channel::depth, c, c));
            CHECK(d.world_normal(k, c, c).dot(p.normalized()) > 0.95);
        }
    }
}

TEST_CASE("clouds without normals give zero normal channels")
{
    const PointCloud c = fixtures::cube(2000, 3, -0.2, 0.2);
    KaplanConfig cfg;
    cfg.side_length = 0.4;
    const KaplanDescriptor d = build_kaplan(c, Point3::Zero(), cfg);
    CHECK_FALSE(d.has_normals());
}

TEST_CASE("tangential descriptor aligns with the surface")
{
    const PointCloud p = fixtures::plane(2000, 0.5, 0.0, 4);
    PointCloud bare;
    bare.points = p.points;
    const IndexedCloud idx(bare);
    KaplanConfig cfg;
    cfg.orientation = OrientationMode::tangential;
    cfg.num_planes = 1;
    cfg.side_length = 0.3;
    const KaplanDescriptor d = build_kaplan(idx, p.points[0], cfg, 0);
    CHECK(std::abs(d.planes[0].w_axis.z()) == doctest::Approx(1.0).epsilon(1e-9));
    for (double depth : d.channels[0][Channel::depth].values()) {
        CHECK(std::abs(depth) < 1e-12);
    }
}
