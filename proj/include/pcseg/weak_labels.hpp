#pragma once

#include <filesystem>
#include <vector>

#include "pcseg/point_cloud.hpp"

namespace pcseg {

struct WeakLabel {
  PointIndex point = 0;
  ClassId class_id = kUnlabeled;

  friend bool operator==(const WeakLabel&, const WeakLabel&) = default;
};

/// The handful of annotated points a run starts from. Class ids are 0-based;
/// class_frequency[c] is the number of points of class c in the training data
/// and only serves as a tie-break.
struct WeakLabelSet {
  std::vector<WeakLabel> entries;
  int num_classes = 0;
  std::vector<std::size_t> class_frequency;
};

/// Draws max(round_half_up(fraction * N), present class count) labeled points.
/// One point per present class is drawn first (ascending class id), the rest
/// uniformly from the remaining points. Pure function of its arguments.
WeakLabelSet sample_weak_labels(const PointCloud& cloud, double fraction, std::uint64_t rng_seed);

/// "index class" rows. The frequency table is recomputed from the cloud's
/// labels when present, otherwise from the file entries.
void save_weak_labels(const WeakLabelSet& weak, const std::filesystem::path& path);
WeakLabelSet load_weak_labels(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace pcseg
