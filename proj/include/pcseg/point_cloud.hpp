#pragma once

#include <optional>
#include <vector>

#include "pcseg/types.hpp"

namespace pcseg {

/// Positions plus optional per-point channels. Every present channel has
/// exactly one entry per position.
struct PointCloud {
  std::vector<Vec3> positions;                      // meters
  std::optional<std::vector<Vec3>> colors;          // RGB in [0, 1]
  std::optional<std::vector<Vec3>> normals;         // unit length
  std::optional<std::vector<double>> curvatures;    // [0, 1]
  std::optional<std::vector<ClassId>> gt_labels;    // evaluation only
  std::optional<std::vector<std::int32_t>> gt_instances;

  std::size_t size() const noexcept { return positions.size(); }
  bool empty() const noexcept { return positions.empty(); }
  bool has_colors() const noexcept { return colors.has_value(); }
  bool has_labels() const noexcept { return gt_labels.has_value(); }

  /// Keeps only the given indices, in the given order, across all channels.
  PointCloud select(const std::vector<PointIndex>& indices) const;
};

/// Throws Error(Data) when channel lengths differ, a coordinate is not finite,
/// a normal is not unit within 1e-6, or a color leaves [0, 1].
void validate(const PointCloud& cloud);

/// Number of classes implied by the labels (max id + 1), 0 without labels.
int num_label_classes(const PointCloud& cloud);

}  // namespace pcseg
