#ifndef KAPLAN_POINT_CLOUD_IO_HPP
#define KAPLAN_POINT_CLOUD_IO_HPP

#include <kaplan/geometry.hpp>

#include <filesystem>
#include <iosfwd>

namespace kaplan {

// ASCII XYZ: one point per line, "x y z" or "x y z nx ny nz". Blank lines
// and lines starting with '#' are skipped.
PointCloud read_xyz(std::istream& in);
void write_xyz(std::ostream& out, const PointCloud& cloud);

// PLY with a "vertex" element carrying x, y, z and optionally nx, ny, nz.
// Reads ascii, binary_little_endian and binary_big_endian; other vertex
// properties and trailing elements are skipped. Writes binary little-endian
// with double coordinates.
PointCloud read_ply(std::istream& in);
void write_ply(std::ostream& out, const PointCloud& cloud);

/// Dispatches on the extension: ".ply" is PLY, anything else is XYZ.
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

} // namespace kaplan

#endif // KAPLAN_POINT_CLOUD_IO_HPP
