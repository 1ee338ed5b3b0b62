#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pcseg/losses.hpp"
#include "pcseg/point_cloud.hpp"

namespace pcseg {

struct Transform {
  enum class Kind { RotateZ, Flip, Downsample };
  Kind kind = Kind::RotateZ;
  double angle_deg = 0.0;  // RotateZ, in [0, 180]
  int axis = 0;            // Flip: 0, 1, 2 for x, y, z
  double keep = 1.0;       // Downsample, in (0, 1]
  std::uint64_t seed = 0;  // Downsample

  static Transform rotate_z(double degrees);
  static Transform flip(int axis);
  static Transform downsample(double keep, std::uint64_t seed);
};

/// "rotz:90", "flip:x", "down:0.5:42".
Transform parse_transform(std::string_view spec);
std::string to_string(const Transform& t);

struct Transformed {
  PointCloud cloud;
  std::vector<PointIndex> source;  // source[i] = original index of point i
};

/// Rotations and flips move positions and normals; downsampling keeps
/// round_half_up(keep * N) points chosen with the seed, in original order.
Transformed apply(const PointCloud& cloud, const Transform& t);

/// Rotates positions and normals by R about the origin.
PointCloud rotate(const PointCloud& cloud, const Mat3& r);

/// Uniformly distributed rotation matrix.
Mat3 random_rotation(std::uint64_t seed);

/// Mean JS divergence between per-point class rows of an original scene and a
/// transformed copy, compared on the surviving points.
double consistency_loss(const ProbRows& original, const ProbRows& transformed,
                        const std::vector<PointIndex>& source, std::size_t sample_count = 1000,
                        std::uint64_t seed = 0);

}  // namespace pcseg
