#ifndef KAPLAN_DATAGEN_HPP
#define KAPLAN_DATAGEN_HPP

#include <kaplan/geometry.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace kaplan {

struct HoleSpec {
    double fraction = 0.1;
    std::optional<std::size_t> center_index;
    std::uint64_t seed = 0;
};

struct HoleSplit {
    PointCloud incomplete;
    PointCloud missing;
    std::size_t center_index = 0;
    /// Indices of the missing points in the source cloud, ascending.
    std::vector<std::size_t> missing_indices;
};

/// Cuts out the round(fraction * n) nearest neighbours of a hole center
/// (the center included). Both outputs keep the source order. Throws
/// InvalidArgument when the count is 0 or >= n.
HoleSplit synthesize_hole(const PointCloud& cloud, const HoleSpec& spec);

struct LevelData {
    int level_id = 0;
    PointCloud incomplete;
    PointCloud missing;
    PointCloud complete;
};

/// Coarse-to-fine data levels from the finest incomplete/missing pair.
///
/// `ratios` lists the sampling ratio of each level from coarsest to finest;
/// it must be strictly increasing in (0, 1] and end with 1. Each cloud is
/// subsampled independently with one seeded permutation, so coarser levels
/// are subsets of finer ones. complete = incomplete followed by missing.
std::vector<LevelData> build_level_hierarchy(const PointCloud& incomplete, const PointCloud& missing,
                                             std::span<const double> ratios, std::uint64_t seed);

/// Keeps round(ratio * n) points chosen by a seeded permutation, in source order.
PointCloud random_subsample(const PointCloud& cloud, double ratio, std::uint64_t seed);

PointCloud concatenate(const PointCloud& a, const PointCloud& b);

} // namespace kaplan

#endif // KAPLAN_DATAGEN_HPP
