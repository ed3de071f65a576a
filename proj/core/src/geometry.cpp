#include <kaplan/error.hpp>
#include <kaplan/geometry.hpp>

#include <string>

namespace kaplan {

void PointCloud::push_back(const Point3& p, const Vector3& normal)
{
    points.push_back(p);
    if (!normals.empty()) {
        normals.push_back(normal);
    }
}

void PointCloud::validate() const
{
    if (!normals.empty() && normals.size() != points.size()) {
        throw InvalidArgument("point cloud has " + std::to_string(points.size()) + " points but " +
                              std::to_string(normals.size()) + " normals");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!is_finite(points[i])) {
            throw InvalidArgument("point " + std::to_string(i) + " has a non-finite coordinate");
        }
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
        if (!is_finite(normals[i])) {
            throw InvalidArgument("normal " + std::to_string(i) + " has a non-finite component");
        }
    }
}

BoundingBox bounding_box(std::span<const Point3> points)
{
    if (points.empty()) {
        throw InvalidArgument("empty input");
    }
    BoundingBox box{points.front(), points.front()};
    for (const Point3& p : points) {
        box.min = box.min.cwiseMin(p);
        box.max = box.max.cwiseMax(p);
    }
    return box;
}

std::pair<PointCloud, NormalizeTransform> normalize_cloud(const PointCloud& cloud)
{
    if (cloud.empty()) {
        throw InvalidArgument("empty input");
    }
    const BoundingBox box = bounding_box(cloud.points);
    NormalizeTransform transform;
    transform.translation = -box.center();
    const double extent = box.max_extent();
    transform.scale = extent > 0.0 ? 1.0 / extent : 1.0;
    return {apply_transform(cloud, transform), transform};
}

PointCloud apply_transform(const PointCloud& cloud, const NormalizeTransform& transform)
{
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const Point3& p : cloud.points) {
        out.points.push_back(transform.apply(p));
    }
    out.normals = cloud.normals;
    return out;
}

PointCloud invert_transform(const PointCloud& cloud, const NormalizeTransform& transform)
{
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const Point3& p : cloud.points) {
        out.points.push_back(transform.invert(p));
    }
    out.normals = cloud.normals;
    return out;
}

} // namespace kaplan
