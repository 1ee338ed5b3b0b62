#pragma once

#include <filesystem>
#include <vector>

#include "pcseg/types.hpp"

namespace pcseg {

/// Per-point output of a run. class_id is kUnlabeled (-1) for points that
/// never received a label; confidence is 0 for those.
struct PointAssignment {
  RegionId region = kNoRegion;
  ClassId class_id = kUnlabeled;
  double confidence = 0.0;

  friend bool operator==(const PointAssignment&, const PointAssignment&) = default;
};

/// Writes "index region class confidence" rows in index order, confidence with
/// 6 significant digits.
void save_labels(const std::vector<PointAssignment>& assignments, const std::filesystem::path& path);

/// Reads the format written by save_labels. Rows may appear in any order but
/// must cover 0..N-1 exactly once.
std::vector<PointAssignment> load_labels(const std::filesystem::path& path);

}  // namespace pcseg
