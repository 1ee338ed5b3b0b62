#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pcseg/octree.hpp"
#include "pcseg/point_cloud.hpp"

namespace pcseg {

/// PCA frame of one point's radius neighborhood.
struct LocalFrame {
  Vec3 normal = Vec3::UnitZ();
  double curvature = 1.0 / 3.0;  // surface variation l0 / (l0 + l1 + l2)
  std::uint32_t neighbor_count = 0;
  bool degenerate = true;        // fewer than 3 neighbors or zero spread
};

/// Axes deciding the sign of PCA normals. A normal points to the positive side
/// of the first axis it is not nearly perpendicular to (|n . axis| >= 0.1),
/// trying primary, secondary, then tertiary. Rotate the basis with the cloud
/// to get normals that rotate with it.
struct OrientationBasis {
  static constexpr double kDeadZone = 0.1;
  Vec3 primary = Vec3::UnitZ();
  Vec3 secondary = Vec3::UnitX();
  Vec3 tertiary = Vec3::UnitY();

  static OrientationBasis rotated(const Mat3& r);
};

/// Normal = eigenvector of the smallest covariance eigenvalue of the radius
/// neighborhood (query included), oriented by `basis`.
std::vector<LocalFrame> estimate_frames(const PointCloud& cloud, const Octree& tree, double radius,
                                        const OrientationBasis& basis = {});

/// Frame of an explicit point set (neighborhood already gathered).
LocalFrame frame_from_points(std::span<const Vec3> points, const OrientationBasis& basis = {});

/// Copies normals and curvatures into the cloud's optional channels.
void attach_frames(PointCloud& cloud, const std::vector<LocalFrame>& frames);

struct RegionSummary {
  Vec3 normal = Vec3::UnitZ();
  double curvature = 0.0;
  std::optional<Vec3> mean_color;
  double scale = 0.0;  // bounding-box diagonal
  Vec3 centroid = Vec3::Zero();
  std::size_t size = 0;
  bool degenerate = false;
};

/// Running sums behind a region's aggregates so regions can grow point by
/// point or fuse without rescanning members.
class RegionAccumulator {
 public:
  void add(const PointCloud& cloud, std::span<const LocalFrame> frames, PointIndex i);
  void merge(const RegionAccumulator& other);
  RegionSummary summary() const;

  std::size_t size() const noexcept { return count_; }
  const Vec3& bbox_min() const noexcept { return lo_; }
  const Vec3& bbox_max() const noexcept { return hi_; }

 private:
  std::size_t count_ = 0;
  std::size_t frame_count_ = 0;  // non-degenerate members
  Vec3 normal_sum_ = Vec3::Zero();
  double curvature_sum_ = 0.0;      // non-degenerate members
  double curvature_sum_all_ = 0.0;
  Vec3 position_sum_ = Vec3::Zero();
  Vec3 color_sum_ = Vec3::Zero();
  bool has_color_ = false;
  Vec3 lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi_ = Vec3::Constant(-std::numeric_limits<double>::infinity());
};

/// Normal = normalized mean of non-degenerate member normals; flagged
/// degenerate when none exist or they cancel.
RegionSummary region_aggregate(const PointCloud& cloud, std::span<const LocalFrame> frames,
                               std::span<const PointIndex> members);

}  // namespace pcseg
