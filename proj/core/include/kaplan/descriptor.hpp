#ifndef KAPLAN_DESCRIPTOR_HPP
#define KAPLAN_DESCRIPTOR_HPP

#include <kaplan/geometry.hpp>
#include <kaplan/kdtree.hpp>
#include <kaplan/planes.hpp>

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace kaplan {

/// A square single-channel image stored row-major (row = i, column = j).
class ChannelImage {
public:
    ChannelImage() = default;
    explicit ChannelImage(int resolution, double fill = 0.0)
        : resolution_(resolution), values_(static_cast<std::size_t>(resolution) * resolution, fill)
    {
    }

    int resolution() const noexcept { return resolution_; }
    std::size_t cell_count() const noexcept { return values_.size(); }

    double& at(int i, int j) { return values_[index(i, j)]; }
    double at(int i, int j) const { return values_[index(i, j)]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const ChannelImage&) const = default;

private:
    std::size_t index(int i, int j) const
    {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(resolution_) +
               static_cast<std::size_t>(j);
    }

    int resolution_ = 0;
    std::vector<double> values_;
};

enum class Channel : std::size_t { depth = 0, valid = 1, normal_x = 2, normal_y = 3, normal_z = 4 };

inline constexpr std::size_t kChannelsPerPlane = 5;

struct PlaneChannels {
    std::array<ChannelImage, kChannelsPerPlane> images;

    ChannelImage& operator[](Channel c) { return images[static_cast<std::size_t>(c)]; }
    const ChannelImage& operator[](Channel c) const { return images[static_cast<std::size_t>(c)]; }

    bool operator==(const PlaneChannels&) const = default;
};

/// K stacked plane images with five channels each: depth, valid flag and a
/// normal expressed in the plane frame (components along u, v, w).
///
/// Invalid cells hold zeros in every channel.
struct KaplanDescriptor {
    Point3 query = Point3::Zero();
    std::size_t query_index = 0;
    int resolution = 0;
    std::vector<PlaneFrame> planes;
    std::vector<PlaneChannels> channels;

    /// All-zero descriptor on the given planes (which must share a resolution).
    static KaplanDescriptor zeros(const Point3& query, std::vector<PlaneFrame> planes);

    std::size_t num_planes() const noexcept { return planes.size(); }

    double value(std::size_t plane, Channel c, int i, int j) const { return channels[plane][c].at(i, j); }
    double& value(std::size_t plane, Channel c, int i, int j) { return channels[plane][c].at(i, j); }

    Vector3 local_normal(std::size_t plane, int i, int j) const;
    void set_local_normal(std::size_t plane, int i, int j, const Vector3& n);

    /// Local normal of a cell rotated into world coordinates.
    Vector3 world_normal(std::size_t plane, int i, int j) const;

    /// True when any cell with valid >= 0.5 carries a non-zero normal.
    bool has_normals() const;

    /// Same K, R and plane frames.
    bool same_shape(const KaplanDescriptor& other) const;

    /// Throws InvalidArgument if channel sizes disagree with K and R.
    void validate_layout() const;

    bool operator==(const KaplanDescriptor&) const = default;
};

/// Indices of points within Chebyshev distance side_length / 2 of `query`, ascending.
std::vector<std::size_t> collect_box_neighbors(const KdTree& tree, const Point3& query, double side_length);
std::vector<std::size_t> collect_box_neighbors(const PointCloud& cloud, const Point3& query, double side_length);

struct DepthCluster {
    double mean_depth = 0.0;
    /// Indices into the input list, in absorption order.
    std::vector<std::size_t> members;
};

/// Moving-average clustering of the depths falling into one cell.
///
/// Depths are visited by ascending |depth| (ties by index); the cluster
/// starts at the first and absorbs the next one while its gap to the running
/// mean is <= threshold. `depths` must be non-empty.
DepthCluster aggregate_cell_depths(std::span<const double> depths, double threshold);

/// Projection statistics of one cell: count and in-plane barycenter.
struct CellProjection {
    std::size_t count = 0;
    Eigen::Vector2d barycenter = Eigen::Vector2d::Zero();
};

/// Two-pass valid flags for a plane.
///
/// Pass 1 marks a cell valid when it received projections and their
/// barycenter lies within center_radius * cell_size of the cell center.
/// Pass 2 also marks every non-empty cell with >= 3 pass-1-valid cells
/// among its 8 neighbours.
ChannelImage attribute_valid_flags(const PlaneFrame& plane, std::span<const CellProjection> cells,
                                   double center_radius);

/// Builds the descriptor at `query` on planes from make_planes().
KaplanDescriptor build_kaplan(const IndexedCloud& cloud, const Point3& query, const KaplanConfig& config,
                              std::size_t query_index = 0);

/// Builds the descriptor on explicitly given planes.
KaplanDescriptor build_kaplan(const IndexedCloud& cloud, const Point3& query,
                              std::span<const PlaneFrame> planes, const KaplanConfig& config,
                              std::size_t query_index = 0);

KaplanDescriptor build_kaplan(const PointCloud& cloud, const Point3& query, const KaplanConfig& config);

/// Normal used to orient a tangential plane at `query`: the nearest point's
/// normal when the cloud has normals, otherwise a PCA estimate.
Vector3 query_normal(const IndexedCloud& cloud, const Point3& query, int neighbors);

} // namespace kaplan

#endif // KAPLAN_DESCRIPTOR_HPP
