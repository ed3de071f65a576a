#ifndef KAPLAN_PLANES_HPP
#define KAPLAN_PLANES_HPP

#include <kaplan/geometry.hpp>

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace kaplan {

/// An oriented square projection plane centered at a query point.
///
/// (u_axis, v_axis, w_axis) is a right-handed orthonormal frame; w_axis is
/// the plane normal and depths are signed distances along it. The plane is
/// split into resolution x resolution square cells; cell (i, j) is indexed
/// by i along u_axis and j along v_axis.
struct PlaneFrame {
    Point3 origin = Point3::Zero();
    Vector3 u_axis = Vector3::UnitX();
    Vector3 v_axis = Vector3::UnitY();
    Vector3 w_axis = Vector3::UnitZ();
    double side_length = 1.0;
    int resolution = 35;

    double cell_size() const { return side_length / resolution; }

    /// In-plane coordinates of the center of cell (i, j).
    Eigen::Vector2d cell_center(int i, int j) const;

    /// (u, v, depth) of a point relative to this plane.
    Vector3 project(const Point3& p) const;

    /// Cell containing in-plane coordinates (u, v), if it lies on the plane.
    /// Coordinates exactly on the outer border map to the border cell.
    std::optional<std::pair<int, int>> cell_of(double u, double v) const;

    /// Throws InvalidArgument unless the frame is orthonormal, right-handed,
    /// side_length > 0 and resolution is odd and >= 3.
    void validate() const;

    bool operator==(const PlaneFrame&) const = default;
};

enum class OrientationMode { canonical, random_min30, tangential };

std::string_view to_string(OrientationMode mode);
OrientationMode parse_orientation_mode(std::string_view text);

/// Geometry of one descriptor: planes, grid and aggregation parameters.
struct KaplanConfig {
    int num_planes = 3;
    int resolution = 35;
    double side_length = 1.0;
    OrientationMode orientation = OrientationMode::canonical;
    /// Depth gap that ends a cell's moving-average cluster.
    double depth_agg_threshold = 0.001;
    /// Valid-flag radius around a cell center, as a fraction of the cell size.
    double valid_center_radius = 0.4;
    std::uint64_t rng_seed = 0;
    /// Neighbourhood size for the PCA normal used by tangential planes when
    /// the cloud carries no normals.
    int tangent_neighbors = 16;

    double cell_size() const { return side_length / resolution; }

    void validate() const;

    bool operator==(const KaplanConfig&) const = default;
};

/// Minimum angle in degrees between the unoriented normals of any two planes.
double min_pairwise_normal_angle_deg(const std::vector<PlaneFrame>& planes);

/// Instantiates the K planes of a descriptor at `query`.
///
/// canonical: K = 3 uses the coordinate axes as normals (u is the next axis
/// cyclically, v = w x u). K = 9 adds each axis plane rotated by +-45 degrees
/// about its u axis. K = 27 rotates each of those nine planes in-plane by
/// 0 and +-45 degrees.
///
/// random_min30: normals drawn uniformly on the sphere from `rng_seed`,
/// rejecting draws closer than 30 degrees to an accepted plane. Throws
/// InvalidArgument after 1000 consecutive rejections.
///
/// tangential: one plane whose normal is `query_normal` (required).
std::vector<PlaneFrame> make_planes(const Point3& query, const KaplanConfig& config,
                                    const std::optional<Vector3>& query_normal = std::nullopt);

} // namespace kaplan

#endif // KAPLAN_PLANES_HPP
