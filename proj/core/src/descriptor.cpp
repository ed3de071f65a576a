#include <kaplan/descriptor.hpp>
#include <kaplan/error.hpp>
#include <kaplan/normals.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace kaplan {

KaplanDescriptor KaplanDescriptor::zeros(const Point3& query, std::vector<PlaneFrame> planes)
{
    if (planes.empty()) {
        throw InvalidArgument("a descriptor needs at least one plane");
    }
    KaplanDescriptor d;
    d.query = query;
    d.resolution = planes.front().resolution;
    for (const PlaneFrame& p : planes) {
        if (p.resolution != d.resolution) {
            throw InvalidArgument("all planes of a descriptor must share one resolution");
        }
    }
    d.planes = std::move(planes);
    PlaneChannels blank;
    blank.images.fill(ChannelImage(d.resolution));
    d.channels.assign(d.planes.size(), blank);
    return d;
}

Vector3 KaplanDescriptor::local_normal(std::size_t plane, int i, int j) const
{
    const PlaneChannels& c = channels[plane];
    return {c[Channel::normal_x].at(i, j), c[Channel::normal_y].at(i, j), c[Channel::normal_z].at(i, j)};
}

void KaplanDescriptor::set_local_normal(std::size_t plane, int i, int j, const Vector3& n)
{
    PlaneChannels& c = channels[plane];
    c[Channel::normal_x].at(i, j) = n.x();
    c[Channel::normal_y].at(i, j) = n.y();
    c[Channel::normal_z].at(i, j) = n.z();
}

Vector3 KaplanDescriptor::world_normal(std::size_t plane, int i, int j) const
{
    const Vector3 n = local_normal(plane, i, j);
    const PlaneFrame& f = planes[plane];
    return n.x() * f.u_axis + n.y() * f.v_axis + n.z() * f.w_axis;
}

bool KaplanDescriptor::has_normals() const
{
    for (std::size_t k = 0; k < num_planes(); ++k) {
        for (int i = 0; i < resolution; ++i) {
            for (int j = 0; j < resolution; ++j) {
                if (value(k, Channel::valid, i, j) >= 0.5 && local_normal(k, i, j).squaredNorm() > 0.0) {
                    return true;
                }
            }
        }
    }
    return false;
}

bool KaplanDescriptor::same_shape(const KaplanDescriptor& other) const
{
    return resolution == other.resolution && planes == other.planes && channels.size() == other.channels.size();
}

void KaplanDescriptor::validate_layout() const
{
    if (channels.size() != planes.size()) {
        throw InvalidArgument("descriptor has " + std::to_string(planes.size()) + " planes but " +
                              std::to_string(channels.size()) + " channel sets");
    }
    for (const PlaneChannels& pc : channels) {
        for (const ChannelImage& img : pc.images) {
            if (img.resolution() != resolution ||
                img.cell_count() != static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution)) {
                throw InvalidArgument("descriptor channel size does not match its resolution");
            }
        }
    }
}

std::vector<std::size_t> collect_box_neighbors(const KdTree& tree, const Point3& query, double side_length)
{
    if (!(side_length > 0.0)) {
        throw InvalidArgument("box side length must be positive");
    }
    const Vector3 half = Vector3::Constant(0.5 * side_length);
    std::vector<std::size_t> candidates = tree.box_query(query - half, query + half);
    // The box bounds are rounded; re-check with the exact Chebyshev distance.
    std::erase_if(candidates, [&](std::size_t idx) {
        return (tree.point(idx) - query).cwiseAbs().maxCoeff() > 0.5 * side_length;
    });
    return candidates;
}

std::vector<std::size_t> collect_box_neighbors(const PointCloud& cloud, const Point3& query, double side_length)
{
    return collect_box_neighbors(KdTree(cloud.points), query, side_length);
}

DepthCluster aggregate_cell_depths(std::span<const double> depths, double threshold)
{
    if (depths.empty()) {
        throw InvalidArgument("aggregate_cell_depths: no depths");
    }
    std::vector<std::size_t> order(depths.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(depths[a]) < std::abs(depths[b]); });

    DepthCluster cluster;
    double sum = depths[order.front()];
    cluster.members.push_back(order.front());
    for (std::size_t r = 1; r < order.size(); ++r) {
        const double mean = sum / static_cast<double>(cluster.members.size());
        if (std::abs(depths[order[r]] - mean) > threshold) {
            break;
        }
        sum += depths[order[r]];
        cluster.members.push_back(order[r]);
    }
    cluster.mean_depth = sum / static_cast<double>(cluster.members.size());
    return cluster;
}

ChannelImage attribute_valid_flags(const PlaneFrame& plane, std::span<const CellProjection> cells,
                                   double center_radius)
{
    const int r = plane.resolution;
    if (cells.size() != static_cast<std::size_t>(r) * static_cast<std::size_t>(r)) {
        throw InvalidArgument("attribute_valid_flags: grid size does not match the plane resolution");
    }
    auto cell = [&](int i, int j) -> const CellProjection& {
        return cells[static_cast<std::size_t>(i) * static_cast<std::size_t>(r) + static_cast<std::size_t>(j)];
    };

    const double radius = center_radius * plane.cell_size();
    ChannelImage first(r);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            const CellProjection& c = cell(i, j);
            if (c.count > 0 && (c.barycenter - plane.cell_center(i, j)).norm() <= radius) {
                first.at(i, j) = 1.0;
            }
        }
    }

    ChannelImage second = first;
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            if (first.at(i, j) == 1.0 || cell(i, j).count == 0) {
                continue;
            }
            int valid_neighbors = 0;
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ni = i + di;
                    const int nj = j + dj;
                    if ((di != 0 || dj != 0) && ni >= 0 && nj >= 0 && ni < r && nj < r && first.at(ni, nj) == 1.0) {
                        ++valid_neighbors;
                    }
                }
            }
            if (valid_neighbors >= 3) {
                second.at(i, j) = 1.0;
            }
        }
    }
    return second;
}

Vector3 query_normal(const IndexedCloud& cloud, const Point3& query, int neighbors)
{
    if (cloud.size() == 0) {
        return Vector3::UnitZ();
    }
    if (cloud.cloud().has_normals()) {
        const Vector3 n = cloud.cloud().normals[cloud.tree().nearest(query).index];
        return n.norm() > 0.0 ? Vector3(n.normalized()) : Vector3::UnitZ();
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(neighbors, 3)), cloud.size());
    std::vector<Point3> hood;
    for (std::size_t idx : cloud.tree().knn(query, k)) {
        hood.push_back(cloud.cloud().points[idx]);
    }
    return estimate_normal(hood, query).normal;
}

KaplanDescriptor build_kaplan(const IndexedCloud& cloud, const Point3& query, const KaplanConfig& config,
                              std::size_t query_index)
{
    config.validate();
    std::optional<Vector3> normal;
    if (config.orientation == OrientationMode::tangential) {
        normal = query_normal(cloud, query, config.tangent_neighbors);
    }
    const std::vector<PlaneFrame> planes = make_planes(query, config, normal);
    return build_kaplan(cloud, query, planes, config, query_index);
}

KaplanDescriptor build_kaplan(const IndexedCloud& cloud, const Point3& query, std::span<const PlaneFrame> planes,
                              const KaplanConfig& config, std::size_t query_index)
{
    if (planes.empty()) {
        throw InvalidArgument("build_kaplan: no planes");
    }
    for (const PlaneFrame& p : planes) {
        p.validate();
        if (p.side_length != planes.front().side_length) {
            throw InvalidArgument("build_kaplan: planes must share one side length");
        }
    }

    KaplanDescriptor d = KaplanDescriptor::zeros(query, std::vector<PlaneFrame>(planes.begin(), planes.end()));
    d.query_index = query_index;

    const PointCloud& pc = cloud.cloud();
    const bool with_normals = pc.has_normals();
    const int r = d.resolution;
    const std::size_t cell_count = static_cast<std::size_t>(r) * static_cast<std::size_t>(r);
    const std::vector<std::size_t> neighbors = collect_box_neighbors(cloud.tree(), query, planes.front().side_length);

    std::vector<CellProjection> projections(cell_count);
    std::vector<std::size_t> offsets(cell_count + 1);
    std::vector<std::size_t> point_cell(neighbors.size());
    std::vector<double> point_depth(neighbors.size());
    std::vector<std::size_t> bucket(neighbors.size());
    std::vector<double> depths;

    for (std::size_t k = 0; k < d.num_planes(); ++k) {
        const PlaneFrame& plane = d.planes[k];
        std::fill(projections.begin(), projections.end(), CellProjection{});
        std::fill(offsets.begin(), offsets.end(), 0);

        constexpr std::size_t kOutside = static_cast<std::size_t>(-1);
        for (std::size_t n = 0; n < neighbors.size(); ++n) {
            const Vector3 uvd = plane.project(pc.points[neighbors[n]]);
            point_depth[n] = uvd.z();
            const auto ij = plane.cell_of(uvd.x(), uvd.y());
            if (!ij) {
                point_cell[n] = kOutside;
                continue;
            }
            const std::size_t c = static_cast<std::size_t>(ij->first) * static_cast<std::size_t>(r) +
                                  static_cast<std::size_t>(ij->second);
            point_cell[n] = c;
            projections[c].count += 1;
            projections[c].barycenter += Eigen::Vector2d(uvd.x(), uvd.y());
            offsets[c + 1] += 1;
        }
        for (CellProjection& cp : projections) {
            if (cp.count > 0) {
                cp.barycenter /= static_cast<double>(cp.count);
            }
        }
        std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
        {
            std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
            for (std::size_t n = 0; n < neighbors.size(); ++n) {
                if (point_cell[n] != kOutside) {
                    bucket[fill[point_cell[n]]++] = n;
                }
            }
        }

        PlaneChannels& out = d.channels[k];
        out[Channel::valid] = attribute_valid_flags(plane, projections, config.valid_center_radius);

        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r; ++j) {
                if (out[Channel::valid].at(i, j) != 1.0) {
                    continue;
                }
                const std::size_t c = static_cast<std::size_t>(i) * static_cast<std::size_t>(r) +
                                      static_cast<std::size_t>(j);
                depths.clear();
                for (std::size_t s = offsets[c]; s < offsets[c + 1]; ++s) {
                    depths.push_back(point_depth[bucket[s]]);
                }
                const DepthCluster cluster = aggregate_cell_depths(depths, config.depth_agg_threshold);
                out[Channel::depth].at(i, j) = cluster.mean_depth;

                if (with_normals) {
                    Vector3 sum = Vector3::Zero();
                    for (std::size_t m : cluster.members) {
                        sum += pc.normals[neighbors[bucket[offsets[c] + m]]];
                    }
                    Vector3 local(sum.dot(plane.u_axis), sum.dot(plane.v_axis), sum.dot(plane.w_axis));
                    const double norm = local.norm();
                    local = norm > 0.0 ? Vector3(local / norm) : Vector3::UnitZ();
                    d.set_local_normal(k, i, j, local);
                }
            }
        }
    }
    return d;
}

KaplanDescriptor build_kaplan(const PointCloud& cloud, const Point3& query, const KaplanConfig& config)
{
    return build_kaplan(IndexedCloud(cloud), query, config);
}

} // namespace kaplan
