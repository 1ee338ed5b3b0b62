#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcseg/octree.hpp"
#include "pcseg/types.hpp"

namespace pcseg {

/// counts[g * classes + p]: points of true class g predicted as p.
/// unassigned[g]: points of true class g with no prediction (-1); they count
/// as false negatives.
struct ConfusionMatrix {
  int classes = 0;
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> unassigned;

  std::uint64_t at(int gt, int pred) const { return counts[static_cast<std::size_t>(gt) * classes + pred]; }
  std::uint64_t total() const;
};

/// Points whose ground truth is -1 are skipped.
ConfusionMatrix confusion_matrix(std::span<const ClassId> pred, std::span<const ClassId> gt, int classes);

struct MiouResult {
  double miou = 0.0;
  std::vector<double> iou;          // NaN for classes absent from gt and prediction
  std::vector<std::uint8_t> valid;  // class counted in the mean
};

MiouResult miou(const ConfusionMatrix& conf);

struct InstanceSet {
  ClassId class_id = kUnlabeled;
  std::vector<PointIndex> points;  // ascending
  double score = 1.0;
};

/// Point-set IoU of two ascending index lists.
double point_iou(std::span<const PointIndex> a, std::span<const PointIndex> b);

struct ApResult {
  double mean_ap = 0.0;
  std::vector<ClassId> classes;  // classes with at least one gt instance, ascending
  std::vector<double> ap;
};

/// Greedy score-ordered matching at IoU >= 0.5, all-point interpolated AP per
/// class, mean over classes that have gt instances.
ApResult instance_ap50(const std::vector<InstanceSet>& pred, const std::vector<InstanceSet>& gt);

/// Groups points by (class, instance id), skipping class -1 or instance -1.
std::vector<InstanceSet> instances_from_labels(std::span<const ClassId> classes,
                                               std::span<const std::int32_t> instances,
                                               std::span<const double> scores = {});

struct BoundaryPrf {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::size_t gt_boundary = 0;
  std::size_t pred_boundary = 0;
};

/// Points with a differently labeled point within tolerance.
std::vector<std::uint8_t> boundary_points(const Octree& tree, std::span<const std::int32_t> labels,
                                          double tolerance);

/// Boundary precision/recall: a predicted boundary point is correct when a gt
/// boundary point lies within tolerance, and vice versa for recall. An empty
/// gt boundary gives recall 1; an empty predicted boundary gives precision 1
/// only when the gt boundary is empty too.
BoundaryPrf overseg_prf(const Octree& tree, std::span<const std::int32_t> regions,
                        std::span<const ClassId> gt, double tolerance);

}  // namespace pcseg
