#include <kaplan/error.hpp>
#include <kaplan/kdtree.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

namespace kaplan {

namespace {

struct Candidate {
    double dist2;
    std::size_t index;

    bool operator<(const Candidate& other) const
    {
        return dist2 < other.dist2 || (dist2 == other.dist2 && index < other.index);
    }
};

} // namespace

KdTree::KdTree(std::span<const Point3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(leaf_size, 1))
{
    if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidArgument("kd-tree supports at most 2^32 - 1 points");
    }
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0U);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end)
{
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end, -1, -1, 0, 0.0});
    if (end - begin <= leaf_size_) {
        return id;
    }

    Point3 lo = points_[order_[begin]];
    Point3 hi = lo;
    for (std::uint32_t k = begin; k < end; ++k) {
        lo = lo.cwiseMin(points_[order_[k]]);
        hi = hi.cwiseMax(points_[order_[k]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) {
        return id; // all points coincide
    }

    const std::uint32_t mid = begin + (end - begin) / 2;
    auto less = [&](std::uint32_t a, std::uint32_t b) {
        const double ca = points_[a][axis];
        const double cb = points_[b][axis];
        return ca < cb || (ca == cb && a < b);
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, less);

    const double split = points_[order_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

std::vector<Neighbor> KdTree::knn_with_distances(const Point3& query, std::size_t k) const
{
    if (k < 1 || k > points_.size()) {
        throw InvalidArgument("knn: k = " + std::to_string(k) + " outside [1, " + std::to_string(points_.size()) +
                              "]");
    }

    std::priority_queue<Candidate> heap; // worst candidate on top
    auto worst = [&] {
        return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().dist2;
    };

    // Explicit stack of (node, lower bound on squared distance to its cell).
    std::vector<std::pair<std::int32_t, double>> stack;
    stack.emplace_back(0, 0.0);
    while (!stack.empty()) {
        const auto [id, bound] = stack.back();
        stack.pop_back();
        // <= keeps equidistant points with smaller indices reachable.
        if (bound > worst()) {
            continue;
        }
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.left < 0) {
            for (std::uint32_t s = node.begin; s < node.end; ++s) {
                const std::uint32_t idx = order_[s];
                const Candidate c{(points_[idx] - query).squaredNorm(), idx};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            continue;
        }
        const double diff = query[node.axis] - node.split;
        const std::int32_t near = diff <= 0.0 ? node.left : node.right;
        const std::int32_t far = diff <= 0.0 ? node.right : node.left;
        stack.emplace_back(far, std::max(bound, diff * diff));
        stack.emplace_back(near, bound);
    }

    std::vector<Neighbor> out(heap.size());
    for (std::size_t r = heap.size(); r-- > 0;) {
        out[r] = Neighbor{heap.top().index, std::sqrt(heap.top().dist2)};
        heap.pop();
    }
    return out;
}

std::vector<std::size_t> KdTree::knn(const Point3& query, std::size_t k) const
{
    const auto neighbors = knn_with_distances(query, k);
    std::vector<std::size_t> out;
    out.reserve(neighbors.size());
    for (const Neighbor& n : neighbors) {
        out.push_back(n.index);
    }
    return out;
}

Neighbor KdTree::nearest(const Point3& query) const
{
    return knn_with_distances(query, 1).front();
}

std::vector<std::size_t> KdTree::box_query(const Point3& lo, const Point3& hi) const
{
    std::vector<std::size_t> out;
    if (points_.empty()) {
        return out;
    }
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        if (node.left < 0) {
            for (std::uint32_t s = node.begin; s < node.end; ++s) {
                const Point3& p = points_[order_[s]];
                if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all()) {
                    out.push_back(order_[s]);
                }
            }
            continue;
        }
        // Left holds coordinates <= split, right holds coordinates >= split.
        if (lo[node.axis] <= node.split) {
            stack.push_back(node.left);
        }
        if (hi[node.axis] >= node.split) {
            stack.push_back(node.right);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> knn(const PointCloud& cloud, const Point3& query, std::size_t k)
{
    return KdTree(cloud.points).knn(query, k);
}

} // namespace kaplan
