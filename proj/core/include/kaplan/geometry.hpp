#ifndef KAPLAN_GEOMETRY_HPP
#define KAPLAN_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace kaplan {

using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;

/// Positions with optional per-point unit normals.
///
/// When `normals` is non-empty it holds exactly one entry per point.
struct PointCloud {
    std::vector<Point3> points;
    std::vector<Vector3> normals;

    PointCloud() = default;
    explicit PointCloud(std::vector<Point3> pts, std::vector<Vector3> nrm = {})
        : points(std::move(pts)), normals(std::move(nrm))
    {
    }

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
    bool has_normals() const noexcept { return !normals.empty(); }

    /// Appends a point; `normal` is ignored unless the cloud carries normals.
    void push_back(const Point3& p, const Vector3& normal = Vector3::UnitZ());

    /// Throws InvalidArgument on NaN/inf coordinates or a normals/points count mismatch.
    void validate() const;

    bool operator==(const PointCloud&) const = default;
};

struct BoundingBox {
    Point3 min = Point3::Zero();
    Point3 max = Point3::Zero();

    Vector3 extent() const { return max - min; }
    Point3 center() const { return 0.5 * (min + max); }
    double max_extent() const { return extent().maxCoeff(); }
};

/// Axis-aligned bounds of a non-empty point set.
BoundingBox bounding_box(std::span<const Point3> points);

/// Maps p to (p + translation) * scale.
struct NormalizeTransform {
    Vector3 translation = Vector3::Zero();
    double scale = 1.0;

    Point3 apply(const Point3& p) const { return (p + translation) * scale; }
    Point3 invert(const Point3& p) const { return p / scale - translation; }
};

/// Centers the bounding box at the origin and scales its largest edge to 1.
///
/// A cloud with zero extent keeps scale 1. Normals are carried unchanged.
/// Throws InvalidArgument("empty input") on an empty cloud.
std::pair<PointCloud, NormalizeTransform> normalize_cloud(const PointCloud& cloud);

PointCloud apply_transform(const PointCloud& cloud, const NormalizeTransform& transform);
PointCloud invert_transform(const PointCloud& cloud, const NormalizeTransform& transform);

inline bool is_finite(const Vector3& v)
{
    return v.allFinite();
}

} // namespace kaplan

#endif // KAPLAN_GEOMETRY_HPP
