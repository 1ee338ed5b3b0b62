#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pcseg/types.hpp"

namespace pcseg {

struct OctreeParams {
  std::size_t leaf_capacity = 16;
  std::size_t max_depth = 21;
};

/// Counters filled by queries when a stats pointer is passed.
struct QueryStats {
  std::size_t nodes_visited = 0;
  std::size_t bulk_accepted_nodes = 0;  // octants taken whole (ball contains octant)
  std::size_t points_tested = 0;
  bool early_terminated = false;        // KNN ball ended inside a scanned octant
};

/// Immutable octree over a copy of the input points. Radius and KNN queries
/// are exact: they return what a linear scan returns, with distances compared
/// as squared Euclidean norms and KNN ties broken by ascending index.
///
/// Points lying exactly on a splitting plane go to the lower-coordinate child.
class Octree {
 public:
  static Octree build(std::span<const Vec3> points, OctreeParams params = {});

  /// Indices with |p - center|^2 <= r^2, ascending.
  std::vector<PointIndex> radius_query(const Vec3& center, double r,
                                       QueryStats* stats = nullptr) const;

  /// The k nearest indices ordered by (distance, index). Throws Bounds when k
  /// is 0 or exceeds size().
  std::vector<PointIndex> knn_query(const Vec3& center, std::size_t k,
                                    QueryStats* stats = nullptr) const;

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t depth() const noexcept { return depth_; }
  const Vec3& point(PointIndex i) const { return points_[i]; }
  std::span<const Vec3> points() const noexcept { return points_; }
  const OctreeParams& params() const noexcept { return params_; }

  /// Root cube as (center, half extent).
  Vec3 root_center() const { return nodes_.front().center; }
  double root_half_extent() const { return nodes_.front().half; }

  /// Index lists of all leaves, for structural checks.
  std::vector<std::vector<PointIndex>> leaves() const;

 private:
  struct Node {
    Vec3 center;
    double half = 0.0;
    std::uint32_t begin = 0;  // range into order_
    std::uint32_t end = 0;
    std::array<std::int32_t, 8> child{-1, -1, -1, -1, -1, -1, -1, -1};
    bool leaf = true;
  };

  struct KnnHeap;

  std::int32_t build_node(const Vec3& center, double half, std::uint32_t begin, std::uint32_t end,
                          std::size_t depth, std::vector<PointIndex>& scratch);
  void radius_recursive(const Node& node, const Vec3& c, double r, double r2,
                        std::vector<PointIndex>& out, QueryStats& stats) const;
  bool knn_recursive(const Node& node, const Vec3& c, KnnHeap& heap, QueryStats& stats) const;

  std::vector<Vec3> points_;
  std::vector<PointIndex> order_;
  std::vector<Node> nodes_;
  OctreeParams params_;
  std::size_t depth_ = 0;
};

}  // namespace pcseg
