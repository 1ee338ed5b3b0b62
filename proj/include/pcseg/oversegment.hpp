#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "pcseg/config.hpp"
#include "pcseg/descriptors.hpp"
#include "pcseg/labels_io.hpp"
#include "pcseg/local_geometry.hpp"
#include "pcseg/octree.hpp"
#include "pcseg/weak_labels.hpp"

namespace pcseg {

enum class LabelState { Unlabeled, Pseudo, Weak };

struct Region {
  RegionId id = kNoRegion;
  std::vector<PointIndex> members;
  RegionAccumulator acc;
  std::vector<double> descriptor_sum;  // sum of member descriptor rows
  LabelState state = LabelState::Unlabeled;
  ClassId class_id = kUnlabeled;
  double confidence = 0.0;
  bool is_seed = false;

  RegionSummary summary() const { return acc.summary(); }
  void add_point(const PointCloud& cloud, std::span<const LocalFrame> frames,
                 const DescriptorMatrix& descriptors, PointIndex i);
  /// Moves other's members and sums into this region; other is left empty.
  void absorb(Region& other);
  /// Mean member descriptor, renormalized to sum 1 for histogram kinds.
  Descriptor descriptor(DescriptorKind kind) const;
};

/// regions[i].id == i. point_region maps each point to its region, or
/// kNoRegion when it was never assigned.
struct Partition {
  std::vector<Region> regions;
  std::vector<RegionId> point_region;

  std::size_t num_points() const noexcept { return point_region.size(); }
};

/// Weak-labeled points plus the ceil(seed_fraction * N) lowest-curvature
/// points (ties by index), ascending and unique.
std::vector<PointIndex> select_seeds(std::span<const LocalFrame> frames, const WeakLabelSet& weak,
                                     double seed_fraction);

/// sqrt(lambda_n * A_n^2 + lambda_des * A_des^2) with A_n = max(0, n_a . n_b)
/// and A_des = max(0, descriptor cosine). 0 when either side is degenerate.
double affinity(const RegionSummary& a, std::span<const double> desc_a, const RegionSummary& b,
                std::span<const double> desc_b, double lambda_n, double lambda_des);
double affinity(const Region& a, const Region& b, double lambda_n, double lambda_des);

/// Passes when A >= cos(theta_th) * sqrt(lambda_n + lambda_des) and the
/// normal term alone A_n >= cos(theta_th).
bool passes_affinity_gate(const RegionSummary& region, std::span<const double> region_desc,
                          const RegionSummary& point, std::span<const double> point_desc,
                          const SceneConfig& config);

struct GrowStats {
  std::size_t sweeps = 0;
  std::size_t leftover_points = 0;  // never reached, made singleton regions
};

/// Seeded point-wise region growing. Each seed starts a singleton region (in
/// ascending point order). Every sweep visits active seeds by region id; a
/// seed offers its K nearest unassigned points within the radius, closest
/// first. A point passing the affinity gate joins the region and becomes a
/// seed itself only if its curvature is within zeta of the region's mean;
/// otherwise it starts a new region and seeds it. Stops when all points are
/// assigned, no seeds remain, or a sweep changes nothing. Unreached points end
/// up as singleton regions.
Partition grow(const PointCloud& cloud, std::span<const LocalFrame> frames,
               const DescriptorMatrix& descriptors, const Octree& tree,
               std::span<const PointIndex> seeds, const SceneConfig& config, GrowStats* stats = nullptr);

/// Regions holding weak labels take their majority class (ties: higher
/// class_frequency, then lower id) in the Weak state with confidence 1.
void initial_pseudo_labels(Partition& partition, const WeakLabelSet& weak);

/// Per-point (region, class, confidence) view of a partition.
std::vector<PointAssignment> to_assignments(const Partition& partition);

/// "index region_id" rows.
void save_partition(const Partition& partition, const std::filesystem::path& path);
/// "region_id size class confidence nx ny nz curvature" rows, header first.
void save_region_table(const Partition& partition, const std::filesystem::path& path);

}  // namespace pcseg
