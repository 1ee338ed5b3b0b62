#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pcseg/local_geometry.hpp"
#include "pcseg/octree.hpp"
#include "pcseg/point_cloud.hpp"

namespace pcseg {

/// Angular relation between two oriented points in the Darboux frame
/// u = n1, v = u x (px - pc) / d (normalized), w = u x v.
struct PairFeatures {
  double alpha = 0.0;  // v . n2
  double phi = 0.0;    // u . (px - pc) / d
  double theta = 0.0;  // atan2(w . n2, u . n2)
  Vec3 beta = Vec3::Zero();  // (px - pc) / d, not used by any histogram
  double distance = 0.0;
};

/// Throws DegeneratePair for coincident points. When n1 is parallel to the
/// displacement, v falls back to u x e with e the global axis least parallel
/// to u.
PairFeatures pair_features(const Vec3& pc, const Vec3& n1, const Vec3& px, const Vec3& n2);

enum class DescriptorKind { AdaptedPfh, OriginalPfh, Fpfh, External };

std::string_view to_string(DescriptorKind kind);
DescriptorKind descriptor_kind_from_string(std::string_view name);

/// 125 for adapted PFH, 625 for original PFH, 33 for FPFH, 0 (free) for
/// external embeddings.
std::size_t descriptor_dim(DescriptorKind kind);
bool is_histogram(DescriptorKind kind);

inline constexpr int kPfhBins = 5;
inline constexpr int kFpfhBins = 11;

struct Descriptor {
  DescriptorKind kind = DescriptorKind::AdaptedPfh;
  std::vector<double> values;
  bool isolated = false;  // no neighbors: all-zero histogram

  std::size_t dim() const noexcept { return values.size(); }
};

/// Row-major per-point descriptors of one kind.
struct DescriptorMatrix {
  DescriptorKind kind = DescriptorKind::AdaptedPfh;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<std::uint8_t> isolated;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  Descriptor descriptor(std::size_t i) const;
};

/// Pair evaluations, counted for the complexity contract.
struct DescriptorStats {
  std::atomic<std::uint64_t> pair_evaluations{0};
  std::atomic<std::uint64_t> spfh_pair_evaluations{0};  // FPFH first pass only
};

/// Maps a value in [lo, hi] to one of `bins` half-open bins (last bin closed).
int bin_index(double value, double lo, double hi, int bins);

/// Joint (alpha, phi, theta) histogram over every unordered pair in the
/// query's radius ball (query included), normalized to sum 1.
Descriptor adapted_pfh(const PointCloud& cloud, std::span<const LocalFrame> frames,
                       const Octree& tree, PointIndex query, double radius,
                       DescriptorStats* stats = nullptr);

/// As adapted_pfh with the pair distance as fourth axis, binned on
/// [0, distance_range]. A non-positive distance_range means 2 * radius.
Descriptor original_pfh(const PointCloud& cloud, std::span<const LocalFrame> frames,
                        const Octree& tree, PointIndex query, double radius,
                        DescriptorStats* stats = nullptr, double distance_range = 0.0);

/// Simplified histogram of one point: 11 bins per feature over the k pairs
/// (query, neighbor), each 11-bin block normalized to sum 1.
Descriptor simplified_pfh(const PointCloud& cloud, std::span<const LocalFrame> frames,
                          const Octree& tree, PointIndex query, double radius,
                          DescriptorStats* stats = nullptr);

/// Own simplified histogram plus the 1/d weighted mean of the neighbors'
/// simplified histograms, normalized to sum 1.
Descriptor fpfh(const PointCloud& cloud, std::span<const LocalFrame> frames, const Octree& tree,
                PointIndex query, double radius, DescriptorStats* stats = nullptr);

/// Descriptors for every point. FPFH computes each simplified histogram once,
/// so its first pass costs exactly sum(k_i) pair evaluations.
DescriptorMatrix compute_descriptors(const PointCloud& cloud, std::span<const LocalFrame> frames,
                                     const Octree& tree, DescriptorKind kind, double radius,
                                     DescriptorStats* stats = nullptr, double distance_range = 0.0);

/// Mean of member rows, renormalized to sum 1 for histogram kinds.
Descriptor region_descriptor(const DescriptorMatrix& descriptors, std::span<const PointIndex> members);

/// Cosine similarity; 0 when either side is all-zero. Throws Shape on kind or
/// dimension mismatch.
double descriptor_cosine(const Descriptor& a, const Descriptor& b);
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace pcseg
