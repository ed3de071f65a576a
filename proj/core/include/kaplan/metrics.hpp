#ifndef KAPLAN_METRICS_HPP
#define KAPLAN_METRICS_HPP

#include <kaplan/geometry.hpp>

#include <cstddef>
#include <string_view>

namespace kaplan {

enum class EvalRegion { global, hole_only };

std::string_view to_string(EvalRegion region);

struct EvalReport {
    /// Symmetric Chamfer distance (not scaled); NaN when the hole-only
    /// restriction is empty.
    double chamfer = 0.0;
    double accuracy = 0.0;
    double completeness = 0.0;
    double f1 = 0.0;
    double threshold = 0.01;
    EvalRegion region = EvalRegion::global;
    std::size_t pred_count = 0;
    std::size_t gt_count = 0;
    /// Set by hole_region_report when no predicted point maps into the hole.
    bool empty_restriction = false;
};

/// mean_a min_b |a - b| + mean_b min_a |b - a| (Euclidean, exact).
double chamfer(const PointCloud& a, const PointCloud& b, std::size_t threads = 0);

/// Accuracy, completeness (percent) and their harmonic mean at `threshold`;
/// also fills in the Chamfer distance.
EvalReport f1_score(const PointCloud& pred, const PointCloud& gt, double threshold, std::size_t threads = 0);

/// f1_score restricted to the hole: only predicted points whose nearest
/// gt_complete point belongs to gt_missing are scored, against gt_missing.
EvalReport hole_region_report(const PointCloud& pred, const PointCloud& gt_complete, const PointCloud& gt_missing,
                              double threshold, std::size_t threads = 0);

/// Harmonic mean, 0 when both are 0.
double harmonic_mean(double a, double b);

} // namespace kaplan

#endif // KAPLAN_METRICS_HPP
