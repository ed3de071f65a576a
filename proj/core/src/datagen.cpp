#include <kaplan/datagen.hpp>
#include <kaplan/error.hpp>
#include <kaplan/kdtree.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace kaplan {

namespace {

PointCloud take(const PointCloud& cloud, const std::vector<std::size_t>& indices)
{
    PointCloud out;
    out.points.reserve(indices.size());
    if (cloud.has_normals()) {
        out.normals.reserve(indices.size());
    }
    for (std::size_t i : indices) {
        out.points.push_back(cloud.points[i]);
        if (cloud.has_normals()) {
            out.normals.push_back(cloud.normals[i]);
        }
    }
    return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

std::size_t keep_count(std::size_t n, double ratio)
{
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

std::vector<std::size_t> sorted_prefix(const std::vector<std::size_t>& perm, std::size_t count)
{
    std::vector<std::size_t> kept(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(kept.begin(), kept.end());
    return kept;
}

void check_ratio(double ratio)
{
    if (!(ratio > 0.0) || ratio > 1.0) {
        throw InvalidArgument("sampling ratio must be in (0, 1]");
    }
}

} // namespace

HoleSplit synthesize_hole(const PointCloud& cloud, const HoleSpec& spec)
{
    cloud.validate();
    const std::size_t n = cloud.size();
    if (!(spec.fraction > 0.0) || !(spec.fraction < 1.0)) {
        throw InvalidArgument("hole fraction must be in (0, 1)");
    }
    const std::size_t count = keep_count(n, spec.fraction);
    if (count == 0 || count >= n) {
        throw InvalidArgument("hole of " + std::to_string(count) + " points in a cloud of " + std::to_string(n));
    }

    std::size_t center = 0;
    if (spec.center_index) {
        if (*spec.center_index >= n) {
            throw InvalidArgument("hole center index out of range");
        }
        center = *spec.center_index;
    } else {
        std::mt19937_64 rng(spec.seed);
        center = static_cast<std::size_t>(rng() % n);
    }

    std::vector<std::size_t> hole = knn(cloud, cloud.points[center], count);
    if (std::find(hole.begin(), hole.end(), center) == hole.end()) {
        // Duplicates of the center can crowd it out of its own neighbourhood.
        hole.back() = center;
    }
    std::sort(hole.begin(), hole.end());

    std::vector<bool> in_hole(n, false);
    for (std::size_t i : hole) {
        in_hole[i] = true;
    }
    std::vector<std::size_t> kept;
    kept.reserve(n - hole.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_hole[i]) {
            kept.push_back(i);
        }
    }

    HoleSplit split;
    split.incomplete = take(cloud, kept);
    split.missing = take(cloud, hole);
    split.center_index = center;
    split.missing_indices = std::move(hole);
    return split;
}

PointCloud random_subsample(const PointCloud& cloud, double ratio, std::uint64_t seed)
{
    check_ratio(ratio);
    const auto perm = permutation(cloud.size(), seed);
    return take(cloud, sorted_prefix(perm, keep_count(cloud.size(), ratio)));
}

PointCloud concatenate(const PointCloud& a, const PointCloud& b)
{
    if (!a.empty() && !b.empty() && a.has_normals() != b.has_normals()) {
        throw InvalidArgument("concatenate: only one cloud carries normals");
    }
    PointCloud out = a.empty() ? b : a;
    if (a.empty()) {
        return out;
    }
    out.points.insert(out.points.end(), b.points.begin(), b.points.end());
    out.normals.insert(out.normals.end(), b.normals.begin(), b.normals.end());
    return out;
}

std::vector<LevelData> build_level_hierarchy(const PointCloud& incomplete, const PointCloud& missing,
                                             std::span<const double> ratios, std::uint64_t seed)
{
    if (ratios.empty()) {
        throw InvalidArgument("level hierarchy needs at least one ratio");
    }
    for (std::size_t l = 0; l < ratios.size(); ++l) {
        check_ratio(ratios[l]);
        if (l > 0 && !(ratios[l] > ratios[l - 1])) {
            throw InvalidArgument("level ratios must be strictly increasing");
        }
    }
    if (ratios.back() != 1.0) {
        throw InvalidArgument("the finest level ratio must be 1");
    }

    const auto perm_incomplete = permutation(incomplete.size(), seed);
    const auto perm_missing = permutation(missing.size(), seed ^ 0xA5A5A5A5A5A5A5A5ULL);

    std::vector<LevelData> levels;
    for (std::size_t l = 0; l < ratios.size(); ++l) {
        LevelData level;
        level.level_id = static_cast<int>(l);
        level.incomplete = take(incomplete, sorted_prefix(perm_incomplete, keep_count(incomplete.size(), ratios[l])));
        level.missing = take(missing, sorted_prefix(perm_missing, keep_count(missing.size(), ratios[l])));
        if (level.incomplete.empty() || level.missing.empty()) {
            throw InvalidArgument("level " + std::to_string(l) + " subsample is empty");
        }
        level.complete = concatenate(level.incomplete, level.missing);
        levels.push_back(std::move(level));
    }
    return levels;
}

} // namespace kaplan
