#ifndef KAPLAN_NORMALS_HPP
#define KAPLAN_NORMALS_HPP

#include <kaplan/geometry.hpp>
#include <kaplan/kdtree.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace kaplan {

struct NormalEstimate {
    Vector3 normal = Vector3::UnitZ();
    bool degenerate = false;
};

/// PCA normal of a neighbourhood: eigenvector of the smallest covariance
/// eigenvalue, oriented so that it points from the neighbourhood centroid
/// towards `anchor`. A covariance of rank < 2 yields +z with `degenerate` set.
NormalEstimate estimate_normal(std::span<const Point3> neighborhood, const Point3& anchor);

struct NormalEstimationResult {
    PointCloud cloud;
    std::vector<bool> degenerate;
    std::size_t degenerate_count = 0;
};

/// Estimates a unit normal for every point from its k nearest neighbours
/// (the point itself included). Requires 3 <= k <= |cloud|.
NormalEstimationResult estimate_normals(const PointCloud& cloud, std::size_t k);

} // namespace kaplan

#endif // KAPLAN_NORMALS_HPP
