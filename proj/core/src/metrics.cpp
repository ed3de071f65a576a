#include <kaplan/error.hpp>
#include <kaplan/kdtree.hpp>
#include <kaplan/metrics.hpp>
#include <kaplan/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_set>
#include <vector>

namespace kaplan {

namespace {

/// Distance from every point of `from` to its nearest neighbour in `tree`.
std::vector<double> nearest_distances(const PointCloud& from, const KdTree& tree, std::size_t threads)
{
    std::vector<double> out(from.size());
    parallel_for(from.size(), [&](std::size_t i) { out[i] = tree.nearest(from.points[i]).distance; }, threads);
    return out;
}

double mean(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double percent_within(const std::vector<double>& d, double threshold)
{
    const auto hits = std::count_if(d.begin(), d.end(), [&](double x) { return x <= threshold; });
    return 100.0 * static_cast<double>(hits) / static_cast<double>(d.size());
}

void require_nonempty(const PointCloud& c, const char* what)
{
    if (c.empty()) {
        throw InvalidArgument(std::string(what) + " cloud is empty");
    }
}

struct PointHash {
    std::size_t operator()(const Point3& p) const noexcept
    {
        std::size_t h = 0;
        for (int k = 0; k < 3; ++k) {
            h ^= std::hash<double>{}(p[k]) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

struct PointEq {
    bool operator()(const Point3& a, const Point3& b) const noexcept { return a == b; }
};

EvalReport score(const PointCloud& pred, const PointCloud& gt, double threshold, std::size_t threads)
{
    const KdTree gt_tree(gt.points);
    const KdTree pred_tree(pred.points);
    const auto d_pred = nearest_distances(pred, gt_tree, threads);
    const auto d_gt = nearest_distances(gt, pred_tree, threads);

    EvalReport r;
    r.threshold = threshold;
    r.pred_count = pred.size();
    r.gt_count = gt.size();
    r.chamfer = mean(d_pred) + mean(d_gt);
    r.accuracy = percent_within(d_pred, threshold);
    r.completeness = percent_within(d_gt, threshold);
    r.f1 = harmonic_mean(r.accuracy, r.completeness);
    return r;
}

} // namespace

std::string_view to_string(EvalRegion region)
{
    return region == EvalRegion::global ? "global" : "hole_only";
}

double harmonic_mean(double a, double b)
{
    return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
}

double chamfer(const PointCloud& a, const PointCloud& b, std::size_t threads)
{
    require_nonempty(a, "first");
    require_nonempty(b, "second");
    const KdTree ta(a.points);
    const KdTree tb(b.points);
    return mean(nearest_distances(a, tb, threads)) + mean(nearest_distances(b, ta, threads));
}

EvalReport f1_score(const PointCloud& pred, const PointCloud& gt, double threshold, std::size_t threads)
{
    require_nonempty(pred, "predicted");
    require_nonempty(gt, "ground truth");
    if (!(threshold > 0.0)) {
        throw InvalidArgument("F1 threshold must be positive");
    }
    return score(pred, gt, threshold, threads);
}

EvalReport hole_region_report(const PointCloud& pred, const PointCloud& gt_complete, const PointCloud& gt_missing,
                              double threshold, std::size_t threads)
{
    require_nonempty(pred, "predicted");
    require_nonempty(gt_complete, "ground truth");
    require_nonempty(gt_missing, "missing region");
    if (!(threshold > 0.0)) {
        throw InvalidArgument("F1 threshold must be positive");
    }

    const std::unordered_set<Point3, PointHash, PointEq> hole(gt_missing.points.begin(), gt_missing.points.end());
    const KdTree complete_tree(gt_complete.points);
    std::vector<char> in_hole(pred.size(), 0);
    parallel_for(
        pred.size(),
        [&](std::size_t i) {
            const Neighbor nb = complete_tree.nearest(pred.points[i]);
            in_hole[i] = hole.count(complete_tree.point(nb.index)) ? 1 : 0;
        },
        threads);

    PointCloud restricted;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (in_hole[i]) {
            restricted.points.push_back(pred.points[i]);
        }
    }

    EvalReport r;
    if (restricted.empty()) {
        r.chamfer = std::numeric_limits<double>::quiet_NaN();
        r.threshold = threshold;
        r.gt_count = gt_missing.size();
        r.empty_restriction = true;
    } else {
        r = score(restricted, gt_missing, threshold, threads);
    }
    r.region = EvalRegion::hole_only;
    return r;
}

} // namespace kaplan
