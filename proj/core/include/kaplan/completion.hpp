#ifndef KAPLAN_COMPLETION_HPP
#define KAPLAN_COMPLETION_HPP

#include <kaplan/backends.hpp>
#include <kaplan/descriptor.hpp>
#include <kaplan/geometry.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace kaplan {

/// A candidate point lifted from one descriptor cell.
struct PredictionRecord {
    Point3 point = Point3::Zero();
    Vector3 normal = Vector3::UnitZ();
    std::size_t source_query = 0;
    std::size_t source_plane = 0;
    double predicted_depth = 0.0;
    int cell_i = 0;
    int cell_j = 0;
};

/// One representative point per voxel, with the queries that supported it.
struct FilteredPrediction {
    PredictionRecord record;
    std::vector<std::size_t> supporting_queries;
};

/// Settings of one level of the coarse-to-fine pipeline.
///
/// Unset optionals are derived when the level runs: side length from the
/// cloud extent (level 0) or half the previous level; depth change threshold
/// 2 * cell size; voxel size 1 * cell size; Gaussian sigma side / 4.
struct LevelConfig {
    int level_id = 0;
    std::size_t num_query_points = 10;
    KaplanConfig kaplan;
    std::optional<double> side_length;
    std::optional<double> depth_change_threshold;
    std::optional<double> filter_voxel_size;
    std::optional<double> gaussian_sigma;
    std::size_t min_support = 2;
};

/// A LevelConfig with every derived value filled in.
struct ResolvedLevel {
    int level_id = 0;
    std::size_t num_query_points = 10;
    KaplanConfig kaplan;
    double depth_change_threshold = 0.0;
    double filter_voxel_size = 0.0;
    double gaussian_sigma = 0.0;
    std::size_t min_support = 2;
};

ResolvedLevel resolve_level(const LevelConfig& level, double side_length);

struct PipelineConfig {
    std::vector<LevelConfig> levels;
    double valid_threshold = 0.5;
    std::uint64_t rng_seed = 0;
    /// Worker threads for descriptor evaluation; 0 = default_thread_count().
    std::size_t threads = 0;

    /// Three levels with 10 / 20 / 30 query points, K = 3, R = 35.
    static PipelineConfig defaults();

    void validate() const;
};

/// Center of cell (i, j) lifted to `depth` along the plane normal.
/// Throws InvalidArgument for a cell outside the grid.
Point3 lift_cell(const PlaneFrame& plane, int i, int j, double depth);

/// Cells where the output creates geometry: input valid < 0.5 and output
/// valid >= valid_threshold, or both valid with a depth change larger than
/// depth_change_threshold. Normals come from the output normal channels
/// (plane normal when zero).
std::vector<PredictionRecord> predict_points(const KaplanDescriptor& input, const KaplanDescriptor& output,
                                             double depth_change_threshold, double valid_threshold);

/// Voxel filter over pooled predictions.
///
/// Records are binned by floor(point / voxel_size). Voxels supported by
/// fewer than min_support distinct source queries are dropped. In each
/// remaining voxel the record closest to the centroid weighted by
/// exp(-depth^2 / (2 sigma^2)) is kept (ties: smaller |depth|, then smaller
/// source query, then input order). Output is in lexicographic voxel order.
std::vector<FilteredPrediction> filter_predictions(std::span<const PredictionRecord> records, double voxel_size,
                                                   std::size_t min_support, double sigma);

/// Farthest-point sampling from a seeded random start; returns min(n, |cloud|) points.
std::vector<Point3> select_query_points(const PointCloud& cloud, std::size_t n, std::uint64_t seed);
std::vector<Point3> select_query_points(std::span<const Point3> points, std::size_t n, std::uint64_t seed);

struct LevelResult {
    PointCloud augmented;
    std::vector<Point3> new_points;
    std::vector<Point3> queries;
    std::vector<FilteredPrediction> survivors;
    std::size_t raw_predictions = 0;
    ResolvedLevel settings;
};

/// One level: descriptors at every query, backend completion, prediction,
/// filtering, and appending of the surviving points. Input points are
/// never moved.
LevelResult run_level(const PointCloud& cloud, const CompletionBackend& backend, const ResolvedLevel& level,
                      std::span<const Point3> queries, double valid_threshold, std::size_t threads = 0);

struct CompletionTrace {
    std::vector<LevelResult> levels;
};

/// Coarse-to-fine completion. With no levels the input is returned as is.
PointCloud complete(const PointCloud& cloud, const CompletionBackend& backend, const PipelineConfig& config,
                    CompletionTrace* trace = nullptr);

/// Moves every point by the backend's central-cell depth correction,
/// averaged over the planes whose output central valid flag reaches
/// `valid_threshold`. Point count and order are preserved.
PointCloud denoise(const PointCloud& cloud, const CompletionBackend& backend, const KaplanConfig& config,
                   double valid_threshold = 0.5, std::size_t threads = 0);

} // namespace kaplan

#endif // KAPLAN_COMPLETION_HPP
