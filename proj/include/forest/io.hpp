#pragma once

#include <string>

#include "forest/point_cloud.hpp"

namespace forest {

enum class CloudFormat {
  PlyAscii,
  PlyBinaryLe,
  Csv,
};

/// Sniffs the on-disk format: a `ply` magic line selects PLY (ASCII or
/// binary little-endian per the header), anything else is treated as CSV.
CloudFormat detect_format(const std::string& path);

PointCloud read_point_cloud(const std::string& path, CloudFormat format);
PointCloud read_point_cloud(const std::string& path);

void write_point_cloud(const PointCloud& cloud, const std::string& path,
                       CloudFormat format);

}  // namespace forest
