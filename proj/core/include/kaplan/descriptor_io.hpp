#ifndef KAPLAN_DESCRIPTOR_IO_HPP
#define KAPLAN_DESCRIPTOR_IO_HPP

#include <kaplan/descriptor.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace kaplan {

// Binary .kpln layout, all little-endian:
//
//   "KPLN"            4 bytes
//   version           u32 (1)
//   K, R, C           u32 each, C == 5
//   query             3 x f64
//   K plane frames    origin 3 x f64, u/v/w axes 9 x f64, side f64
//   channels          plane-major, [depth, valid, nx, ny, nz], each R x R
//                     f32 row-major
//
// Channel values are stored as f32, so writing a descriptor read from a
// file reproduces the file byte for byte.

inline constexpr std::uint32_t kKplnVersion = 1;

std::vector<std::byte> encode_kpln(const KaplanDescriptor& descriptor);

/// Throws FormatError on bad magic, version, channel count or size.
KaplanDescriptor decode_kpln(std::span<const std::byte> bytes);

void write_kpln(const std::filesystem::path& path, const KaplanDescriptor& descriptor);
KaplanDescriptor read_kpln(const std::filesystem::path& path);

} // namespace kaplan

#endif // KAPLAN_DESCRIPTOR_IO_HPP
