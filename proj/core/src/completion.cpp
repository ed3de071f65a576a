#include <kaplan/completion.hpp>
#include <kaplan/error.hpp>
#include <kaplan/parallel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>

namespace kaplan {

namespace {

/// Serialises backend calls when the backend cannot run concurrently.
class BackendGate {
public:
    explicit BackendGate(const CompletionBackend& backend) : serial_(backend.max_concurrency() == 1) {}

    template <class F>
    auto run(F&& f)
    {
        if (serial_) {
            std::lock_guard lock(mutex_);
            return f();
        }
        return f();
    }

private:
    bool serial_;
    std::mutex mutex_;
};

std::uint64_t level_seed(std::uint64_t seed, std::size_t level)
{
    return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(level) + 1));
}

} // namespace

ResolvedLevel resolve_level(const LevelConfig& level, double side_length)
{
    if (!(side_length > 0.0)) {
        throw InvalidArgument("level side length must be positive");
    }
    ResolvedLevel out;
    out.level_id = level.level_id;
    out.num_query_points = level.num_query_points;
    out.kaplan = level.kaplan;
    out.kaplan.side_length = side_length;
    out.kaplan.validate();
    const double cell = out.kaplan.cell_size();
    out.depth_change_threshold = level.depth_change_threshold.value_or(2.0 * cell);
    out.filter_voxel_size = level.filter_voxel_size.value_or(cell);
    out.gaussian_sigma = level.gaussian_sigma.value_or(side_length / 4.0);
    out.min_support = level.min_support;
    if (out.num_query_points < 1) {
        throw InvalidArgument("num_query_points must be >= 1");
    }
    if (!(out.depth_change_threshold > 0.0) || !(out.filter_voxel_size > 0.0) || !(out.gaussian_sigma > 0.0)) {
        throw InvalidArgument("level thresholds must be positive");
    }
    return out;
}

PipelineConfig PipelineConfig::defaults()
{
    PipelineConfig cfg;
    const std::array<std::size_t, 3> queries{10, 20, 30};
    for (std::size_t l = 0; l < queries.size(); ++l) {
        LevelConfig level;
        level.level_id = static_cast<int>(l);
        level.num_query_points = queries[l];
        cfg.levels.push_back(level);
    }
    return cfg;
}

void PipelineConfig::validate() const
{
    if (!(valid_threshold > 0.0) || valid_threshold > 1.0) {
        throw InvalidArgument("valid_threshold must be in (0, 1]");
    }
    std::optional<double> previous;
    for (const LevelConfig& level : levels) {
        if (level.num_query_points < 1) {
            throw InvalidArgument("num_query_points must be >= 1");
        }
        KaplanConfig probe = level.kaplan;
        if (level.side_length) {
            probe.side_length = *level.side_length;
        }
        probe.validate();
        if (level.side_length && previous && !(*level.side_length < *previous)) {
            throw InvalidArgument("level side lengths must be strictly decreasing");
        }
        if (level.side_length) {
            previous = level.side_length;
        }
    }
}

Point3 lift_cell(const PlaneFrame& plane, int i, int j, double depth)
{
    if (i < 0 || j < 0 || i >= plane.resolution || j >= plane.resolution) {
        throw InvalidArgument("lift_cell: cell (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") outside a " + std::to_string(plane.resolution) + "^2 grid");
    }
    const Eigen::Vector2d uv = plane.cell_center(i, j);
    return plane.origin + uv.x() * plane.u_axis + uv.y() * plane.v_axis + depth * plane.w_axis;
}

std::vector<PredictionRecord> predict_points(const KaplanDescriptor& input, const KaplanDescriptor& output,
                                             double depth_change_threshold, double valid_threshold)
{
    if (!input.same_shape(output)) {
        throw ShapeMismatch("predict_points: input and output descriptors have different planes");
    }
    std::vector<PredictionRecord> records;
    for (std::size_t p = 0; p < input.num_planes(); ++p) {
        const PlaneFrame& plane = input.planes[p];
        for (int i = 0; i < input.resolution; ++i) {
            for (int j = 0; j < input.resolution; ++j) {
                const bool in_valid = input.value(p, Channel::valid, i, j) >= 0.5;
                const bool out_valid = output.value(p, Channel::valid, i, j) >= valid_threshold;
                if (!out_valid) {
                    continue;
                }
                const double depth = output.value(p, Channel::depth, i, j);
                if (in_valid && !(std::abs(depth - input.value(p, Channel::depth, i, j)) > depth_change_threshold)) {
                    continue;
                }
                PredictionRecord rec;
                rec.point = lift_cell(plane, i, j, depth);
                const Vector3 n = output.world_normal(p, i, j);
                rec.normal = n.norm() > 0.0 ? Vector3(n.normalized()) : plane.w_axis;
                rec.source_query = input.query_index;
                rec.source_plane = p;
                rec.predicted_depth = depth;
                rec.cell_i = i;
                rec.cell_j = j;
                records.push_back(rec);
            }
        }
    }
    return records;
}

std::vector<FilteredPrediction> filter_predictions(std::span<const PredictionRecord> records, double voxel_size,
                                                   std::size_t min_support, double sigma)
{
    if (!(voxel_size > 0.0)) {
        throw InvalidArgument("filter_predictions: voxel size must be positive");
    }
    if (!(sigma > 0.0)) {
        throw InvalidArgument("filter_predictions: sigma must be positive");
    }

    using VoxelKey = std::array<std::int64_t, 3>;
    std::map<VoxelKey, std::vector<std::size_t>> voxels;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const Point3& p = records[r].point;
        const VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                           static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                           static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
        voxels[key].push_back(r);
    }

    std::vector<FilteredPrediction> out;
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    for (const auto& [key, members] : voxels) {
        std::set<std::size_t> queries;
        for (std::size_t r : members) {
            queries.insert(records[r].source_query);
        }
        if (queries.size() < min_support) {
            continue;
        }

        Point3 weighted = Point3::Zero();
        double weight_sum = 0.0;
        for (std::size_t r : members) {
            const double d = records[r].predicted_depth;
            const double w = std::exp(-d * d * inv_two_sigma2);
            weighted += w * records[r].point;
            weight_sum += w;
        }
        if (!(weight_sum > 0.0)) {
            // Every weight underflowed: fall back to the plain centroid.
            weighted.setZero();
            for (std::size_t r : members) {
                weighted += records[r].point;
            }
            weight_sum = static_cast<double>(members.size());
        }
        const Point3 centroid = weighted / weight_sum;

        std::size_t best = members.front();
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t r : members) {
            const double d2 = (records[r].point - centroid).squaredNorm();
            const PredictionRecord& cand = records[r];
            const PredictionRecord& cur = records[best];
            const bool better =
                d2 < best_d2 ||
                (d2 == best_d2 && (std::abs(cand.predicted_depth) < std::abs(cur.predicted_depth) ||
                                   (std::abs(cand.predicted_depth) == std::abs(cur.predicted_depth) &&
                                    cand.source_query < cur.source_query)));
            if (better) {
                best = r;
                best_d2 = d2;
            }
        }
        out.push_back(FilteredPrediction{records[best], std::vector<std::size_t>(queries.begin(), queries.end())});
    }
    return out;
}

std::vector<Point3> select_query_points(std::span<const Point3> points, std::size_t n, std::uint64_t seed)
{
    if (points.empty()) {
        throw InvalidArgument("select_query_points: empty cloud");
    }
    if (n < 1) {
        throw InvalidArgument("select_query_points: n must be >= 1");
    }
    const std::size_t count = std::min(n, points.size());
    std::mt19937_64 rng(seed);
    std::size_t current = static_cast<std::size_t>(rng() % points.size());

    std::vector<double> min_d2(points.size(), std::numeric_limits<double>::infinity());
    std::vector<Point3> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        out.push_back(points[current]);
        min_d2[current] = -1.0; // never picked again
        std::size_t next = 0;
        double farthest = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (min_d2[i] < 0.0) {
                continue;
            }
            min_d2[i] = std::min(min_d2[i], (points[i] - points[current]).squaredNorm());
            if (min_d2[i] > farthest) {
                farthest = min_d2[i];
                next = i;
            }
        }
        current = next;
    }
    return out;
}

std::vector<Point3> select_query_points(const PointCloud& cloud, std::size_t n, std::uint64_t seed)
{
    return select_query_points(std::span<const Point3>(cloud.points), n, seed);
}

LevelResult run_level(const PointCloud& cloud, const CompletionBackend& backend, const ResolvedLevel& level,
                      std::span<const Point3> queries, double valid_threshold, std::size_t threads)
{
    if (queries.empty()) {
        throw InvalidArgument("run_level: no query points");
    }
    if (cloud.empty()) {
        throw InvalidArgument("run_level: empty cloud");
    }
    const IndexedCloud indexed(cloud);
    BackendGate gate(backend);

    std::vector<std::vector<PredictionRecord>> per_query(queries.size());
    parallel_for(
        queries.size(),
        [&](std::size_t q) {
            const KaplanDescriptor k0 = build_kaplan(indexed, queries[q], level.kaplan, q);
            KaplanDescriptor k;
            try {
                k = gate.run([&] { return complete_descriptor(backend, k0, valid_threshold); });
            } catch (const std::exception& e) {
                std::throw_with_nested(BackendFailure(q, e.what()));
            }
            per_query[q] = predict_points(k0, k, level.depth_change_threshold, valid_threshold);
        },
        threads);

    std::vector<PredictionRecord> pooled;
    for (auto& records : per_query) {
        pooled.insert(pooled.end(), records.begin(), records.end());
    }

    LevelResult result;
    result.settings = level;
    result.raw_predictions = pooled.size();
    result.queries.assign(queries.begin(), queries.end());
    result.survivors = filter_predictions(pooled, level.filter_voxel_size, level.min_support, level.gaussian_sigma);
    result.augmented = cloud;
    for (const FilteredPrediction& f : result.survivors) {
        result.augmented.push_back(f.record.point, f.record.normal);
        result.new_points.push_back(f.record.point);
    }
    return result;
}

PointCloud complete(const PointCloud& cloud, const CompletionBackend& backend, const PipelineConfig& config,
                    CompletionTrace* trace)
{
    if (config.levels.empty()) {
        return cloud;
    }
    if (cloud.empty()) {
        throw InvalidArgument("empty input");
    }
    config.validate();
    cloud.validate();

    double extent = bounding_box(cloud.points).max_extent();
    if (!(extent > 0.0)) {
        extent = 1.0;
    }

    PointCloud current = cloud;
    std::vector<Point3> previous_new;
    double previous_side = 0.0;
    for (std::size_t l = 0; l < config.levels.size(); ++l) {
        const LevelConfig& level_cfg = config.levels[l];
        const double side = level_cfg.side_length.value_or(l == 0 ? extent : previous_side / 2.0);
        if (l > 0 && !(side < previous_side)) {
            throw InvalidArgument("level side lengths must be strictly decreasing");
        }
        ResolvedLevel level = resolve_level(level_cfg, side);
        level.level_id = static_cast<int>(l);

        const std::uint64_t seed = level_seed(config.rng_seed, l);
        const std::vector<Point3> queries =
            (l == 0 || previous_new.empty())
                ? select_query_points(current, level.num_query_points, seed)
                : select_query_points(std::span<const Point3>(previous_new), level.num_query_points, seed);

        LevelResult result = run_level(current, backend, level, queries, config.valid_threshold, config.threads);
        current = result.augmented;
        previous_new = result.new_points;
        previous_side = side;
        if (trace) {
            trace->levels.push_back(std::move(result));
        }
    }
    return current;
}

PointCloud denoise(const PointCloud& cloud, const CompletionBackend& backend, const KaplanConfig& config,
                   double valid_threshold, std::size_t threads)
{
    if (cloud.empty()) {
        throw InvalidArgument("empty input");
    }
    config.validate();
    cloud.validate();
    const IndexedCloud indexed(cloud);
    BackendGate gate(backend);

    PointCloud out = cloud;
    parallel_for(
        cloud.size(),
        [&](std::size_t i) {
            const Point3& p = cloud.points[i];
            const KaplanDescriptor k0 = build_kaplan(indexed, p, config, i);
            KaplanDescriptor k;
            try {
                k = gate.run([&] { return backend.infer(k0); });
                validate_backend_output(k0, k);
            } catch (const std::exception& e) {
                std::throw_with_nested(BackendFailure(i, e.what()));
            }

            const int c = (k0.resolution - 1) / 2;
            Vector3 shift = Vector3::Zero();
            std::size_t votes = 0;
            for (std::size_t plane = 0; plane < k0.num_planes(); ++plane) {
                if (k.value(plane, Channel::valid, c, c) < valid_threshold) {
                    continue;
                }
                const double delta = k.value(plane, Channel::depth, c, c) - k0.value(plane, Channel::depth, c, c);
                shift += delta * k0.planes[plane].w_axis;
                ++votes;
            }
            if (votes > 0) {
                out.points[i] = p + shift / static_cast<double>(votes);
            }
        },
        threads);
    return out;
}

} // namespace kaplan
