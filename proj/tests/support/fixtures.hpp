#ifndef KAPLAN_TESTS_FIXTURES_HPP
#define KAPLAN_TESTS_FIXTURES_HPP

#include <kaplan/geometry.hpp>
#include <kaplan/point_cloud_io.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

namespace fixtures {

using kaplan::Point3;
using kaplan::PointCloud;
using kaplan::Vector3;

/// Uniform points on a sphere with outward normals.
inline PointCloud sphere(std::size_t n, double radius, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    PointCloud c;
    c.points.reserve(n);
    c.normals.reserve(n);
    while (c.points.size() < n) {
        Vector3 v(g(rng), g(rng), g(rng));
        const double len = v.norm();
        if (len < 1e-9) {
            continue;
        }
        v /= len;
        c.points.push_back(radius * v);
        c.normals.push_back(v);
    }
    return c;
}

/// Uniform points in the cube [lo, hi]^3, without normals.
inline PointCloud cube(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) {
        c.points.emplace_back(u(rng), u(rng), u(rng));
    }
    return c;
}

/// Points on the z = 0 square [-half, half]^2; z noise with std-dev sigma.
inline PointCloud plane(std::size_t n, double half, double sigma, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-half, half);
    std::normal_distribution<double> g(0.0, sigma);
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = u(rng);
        const double y = u(rng);
        c.points.emplace_back(x, y, sigma > 0.0 ? g(rng) : 0.0);
    }
    return c;
}

/// Same cloud with every z coordinate set to zero.
inline PointCloud flatten(const PointCloud& c)
{
    PointCloud out = c;
    for (Point3& p : out.points) {
        p.z() = 0.0;
    }
    return out;
}

/// FNV-1a over the binary PLY encoding.
inline std::uint64_t hash_cloud(const PointCloud& c)
{
    std::ostringstream out;
    kaplan::write_ply(out, c);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : out.str()) {
        h = (h ^ ch) * 1099511628211ULL;
    }
    return h;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("kaplan_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace fixtures

#endif // KAPLAN_TESTS_FIXTURES_HPP
