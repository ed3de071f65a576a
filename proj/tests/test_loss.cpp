#include "support/fixtures.hpp"

#include <kaplan/descriptor.hpp>
#include <kaplan/error.hpp>
#include <kaplan/loss.hpp>

#include <doctest.h>

#include <random>

using namespace kaplan;

namespace {

KaplanDescriptor blank(int num_planes, int resolution)
{
    KaplanConfig cfg;
    cfg.num_planes = num_planes;
    cfg.resolution = resolution;
    if (num_planes == 1) {
        cfg.orientation = OrientationMode::tangential;
        return KaplanDescriptor::zeros(Point3::Zero(), make_planes(Point3::Zero(), cfg, Vector3::UnitZ()));
    }
    return KaplanDescriptor::zeros(Point3::Zero(), make_planes(Point3::Zero(), cfg));
}

} // namespace

TEST_CASE("loss of a descriptor against itself is zero")
{
    const PointCloud s = fixtures::sphere(3000, 0.5, 2);
    KaplanConfig cfg;
    cfg.side_length = 0.4;
    const KaplanDescriptor d = build_kaplan(s, s.points[0], cfg);
    const LossBreakdown l = compute_losses(d, d);
    CHECK(l.valid_loss == 0.0);
    CHECK(l.depth_loss == 0.0);
    CHECK(l.normal_loss == 0.0);
    CHECK(l.total == 0.0);
}

TEST_CASE("antiparallel normal in a single masked cell")
{
    KaplanDescriptor gt = blank(1, 3);
    gt.value(0, Channel::valid, 1, 1) = 1.0;
    gt.value(0, Channel::depth, 1, 1) = 0.1;
    gt.set_local_normal(0, 1, 1, Vector3::UnitZ());
    KaplanDescriptor pred = gt;
    pred.set_local_normal(0, 1, 1, -Vector3::UnitZ());
    const LossBreakdown l = compute_losses(pred, gt);
    CHECK(l.normal_loss == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(l.total == doctest::Approx(0.01 * 2.0).epsilon(1e-12));
}

TEST_CASE("valid term averages over all cells of all planes")
{
    KaplanDescriptor gt = blank(3, 5);
    KaplanDescriptor pred = gt;
    pred.value(2, Channel::valid, 0, 4) = 1.0;
    const LossBreakdown l = compute_losses(pred, gt);
    CHECK(l.valid_loss == doctest::Approx(1.0 / 75.0).epsilon(1e-12));
    CHECK(l.depth_loss == 0.0);
}

TEST_CASE("depth term is a per-plane masked mean with a 1/K factor")
{
    KaplanDescriptor gt = blank(3, 5);
    gt.value(0, Channel::valid, 0, 0) = 1.0;
    gt.value(0, Channel::valid, 0, 1) = 1.0;
    gt.value(2, Channel::valid, 3, 3) = 1.0;
    KaplanDescriptor pred = gt;
    pred.value(0, Channel::depth, 0, 0) = 0.1;
    pred.value(0, Channel::depth, 0, 1) = -0.3;
    pred.value(2, Channel::depth, 3, 3) = 0.6;
    pred.value(1, Channel::depth, 2, 2) = 5.0; // unmasked
    const LossBreakdown l = compute_losses(pred, gt);
    CHECK(l.depth_loss == doctest::Approx((0.2 + 0.0 + 0.6) / 3.0).epsilon(1e-12));
}

TEST_CASE("total is the weighted sum of the terms")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 20; ++t) {
        KaplanDescriptor gt = blank(3, 7);
        KaplanDescriptor pred = gt;
        for (std::size_t k = 0; k < 3; ++k) {
            for (int i = 0; i < 7; ++i) {
                for (int j = 0; j < 7; ++j) {
                    gt.value(k, Channel::valid, i, j) = u(rng) < 0.5 ? 1.0 : 0.0;
                    gt.value(k, Channel::depth, i, j) = u(rng);
                    gt.set_local_normal(k, i, j, Vector3(u(rng), u(rng), u(rng) + 0.1).normalized());
                    pred.value(k, Channel::valid, i, j) = u(rng);
                    pred.value(k, Channel::depth, i, j) = u(rng);
                    pred.set_local_normal(k, i, j, Vector3(u(rng), u(rng), u(rng)));
                }
            }
        }
        const LossBreakdown l = compute_losses(pred, gt);
        CHECK(std::abs(l.total - (0.75 * l.valid_loss + l.depth_loss + 0.01 * l.normal_loss)) < 1e-9);
        CHECK(l.valid_loss > 0.0);
        CHECK(l.normal_loss > 0.0);

        LossWeights w{2.0, 3.0, 4.0};
        const LossBreakdown m = compute_losses(pred, gt, w);
        CHECK(std::abs(m.total - (2 * m.valid_loss + 3 * m.depth_loss + 4 * m.normal_loss)) < 1e-9);
    }
}

TEST_CASE("normal term is skipped when the ground truth has no normals")
{
    KaplanDescriptor gt = blank(3, 3);
    gt.value(0, Channel::valid, 1, 1) = 1.0;
    KaplanDescriptor pred = gt;
    pred.set_local_normal(0, 1, 1, Vector3::UnitX());
    CHECK(compute_losses(pred, gt).normal_loss == 0.0);
}

TEST_CASE("shape mismatch")
{
    CHECK_THROWS_AS(compute_losses(blank(3, 5), blank(3, 7)), ShapeMismatch);
    CHECK_THROWS_AS(compute_losses(blank(3, 5), blank(9, 5)), ShapeMismatch);
}
