#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace pcseg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

using PointIndex = std::uint32_t;
using ClassId = std::int32_t;
using RegionId = std::int32_t;

/// Sentinel for "no class" in every label table and file.
inline constexpr ClassId kUnlabeled = -1;
inline constexpr RegionId kNoRegion = -1;

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace pcseg
