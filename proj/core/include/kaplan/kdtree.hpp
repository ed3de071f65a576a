#ifndef KAPLAN_KDTREE_HPP
#define KAPLAN_KDTREE_HPP

#include <kaplan/geometry.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace kaplan {

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
};

/// Balanced kd-tree over a fixed point set.
///
/// The tree copies the points it indexes and is immutable afterwards, so
/// concurrent queries are safe. Every query orders equal distances by
/// ascending point index, which makes results independent of tree layout.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::span<const Point3> points, std::size_t leaf_size = 12);

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const Point3& point(std::size_t index) const { return points_[index]; }

    /// Indices of the k nearest points, ascending by (distance, index).
    /// Throws InvalidArgument unless 1 <= k <= size().
    std::vector<std::size_t> knn(const Point3& query, std::size_t k) const;

    /// Like knn() but with distances.
    std::vector<Neighbor> knn_with_distances(const Point3& query, std::size_t k) const;

    /// Single nearest point; lowest index among equidistant points.
    Neighbor nearest(const Point3& query) const;

    /// Indices of all points inside the closed box [lo, hi], ascending.
    std::vector<std::size_t> box_query(const Point3& lo, const Point3& hi) const;

private:
    struct Node {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        int axis = 0;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);

    std::vector<Point3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_ = 12;
};

/// A point cloud together with a kd-tree over its positions.
class IndexedCloud {
public:
    IndexedCloud() = default;
    explicit IndexedCloud(PointCloud cloud) : cloud_(std::move(cloud)), tree_(cloud_.points) {}

    const PointCloud& cloud() const noexcept { return cloud_; }
    const KdTree& tree() const noexcept { return tree_; }
    std::size_t size() const noexcept { return cloud_.size(); }

private:
    PointCloud cloud_;
    KdTree tree_;
};

/// knn() over a cloud without keeping the index around.
std::vector<std::size_t> knn(const PointCloud& cloud, const Point3& query, std::size_t k);

} // namespace kaplan

#endif // KAPLAN_KDTREE_HPP
