#pragma once

#include <filesystem>
#include <iosfwd>

#include "dpl/geometry.hpp"

namespace dpl {

// ASCII XYZ: one "x y z" triple per line. Blank lines and lines starting
// with '#' are skipped.
PointCloud read_xyz(std::istream& in);
void write_xyz(std::ostream& out, const PointCloud& cloud);

// Little-endian binary: u64 count followed by count * 3 f64 values.
PointCloud read_cloud_binary(std::istream& in);
void write_cloud_binary(std::ostream& out, const PointCloud& cloud);

// Dispatches on extension: ".xyz"/".txt" ASCII, anything else binary.
PointCloud load_cloud(const std::filesystem::path& path);
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);

// Comma-separated grid, one image row per line, empty pixels as -1.
void write_depth_csv(std::ostream& out, const DepthMap& map);

// 16-byte header ("DMAP", u32 width, u32 height, f32 empty sentinel -1.0)
// followed by width * height little-endian f32 values in row-major order.
void write_depth_binary(std::ostream& out, const DepthMap& map);
DepthMap read_depth_binary(std::istream& in);

}  // namespace dpl
