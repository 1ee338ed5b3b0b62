#pragma once

#include <filesystem>
#include <string_view>

#include "pcseg/point_cloud.hpp"

namespace pcseg {

enum class CloudFormat { AsciiXyz, PlyAscii, PlyBinary };

/// ".ply" maps to PlyBinary for writing (reading detects the PLY encoding from
/// the header); everything else is AsciiXyz.
CloudFormat format_from_path(const std::filesystem::path& path);

/// ASCII rows are "x y z [r g b] [label]" with colors in 0-255. The first data
/// row fixes the column layout; '#' starts a comment line.
///
/// PLY: ascii or binary_little_endian, vertex properties x/y/z and optionally
/// red/green/blue/label/instance. Other properties and elements are skipped.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud load_cloud(const std::filesystem::path& path);

PointCloud parse_ascii_cloud(std::string_view text);

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);

}  // namespace pcseg
