#include <kaplan/error.hpp>
#include <kaplan/normals.hpp>

#include <Eigen/Eigenvalues>

#include <string>

namespace kaplan {

namespace {

// Relative eigenvalue floor below which a covariance direction counts as empty.
constexpr double kRankTolerance = 1e-12;

} // namespace

NormalEstimate estimate_normal(std::span<const Point3> neighborhood, const Point3& anchor)
{
    if (neighborhood.empty()) {
        return {Vector3::UnitZ(), true};
    }
    Point3 centroid = Point3::Zero();
    for (const Point3& p : neighborhood) {
        centroid += p;
    }
    centroid /= static_cast<double>(neighborhood.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Point3& p : neighborhood) {
        const Vector3 d = p - centroid;
        cov += d * d.transpose();
    }

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d lambda = solver.eigenvalues(); // ascending
    if (!(lambda(2) > 0.0) || lambda(1) <= kRankTolerance * lambda(2)) {
        return {Vector3::UnitZ(), true};
    }

    Vector3 normal = solver.eigenvectors().col(0).normalized();
    if (normal.dot(anchor - centroid) < 0.0) {
        normal = -normal;
    }
    return {normal, false};
}

NormalEstimationResult estimate_normals(const PointCloud& cloud, std::size_t k)
{
    if (k < 3 || k > cloud.size()) {
        throw InvalidArgument("estimate_normals: need 3 <= k <= |cloud|, got k = " + std::to_string(k) +
                              " for " + std::to_string(cloud.size()) + " points");
    }
    const KdTree tree(cloud.points);

    NormalEstimationResult result;
    result.cloud.points = cloud.points;
    result.cloud.normals.resize(cloud.size());
    result.degenerate.assign(cloud.size(), false);

    std::vector<Point3> neighborhood(k);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto idx = tree.knn(cloud.points[i], k);
        for (std::size_t n = 0; n < k; ++n) {
            neighborhood[n] = cloud.points[idx[n]];
        }
        const NormalEstimate est = estimate_normal(neighborhood, cloud.points[i]);
        result.cloud.normals[i] = est.normal;
        if (est.degenerate) {
            result.degenerate[i] = true;
            ++result.degenerate_count;
        }
    }
    return result;
}

} // namespace kaplan
