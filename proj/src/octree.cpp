#include "pcseg/octree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "pcseg/error.hpp"

namespace pcseg {

namespace {

// Relative slack applied to the octant tests so they only ever err toward
// testing points individually.
constexpr double kSlack = 1e-9;

int octant_of(const Vec3& p, const Vec3& center) {
  return (p.x() > center.x() ? 1 : 0) | (p.y() > center.y() ? 2 : 0) | (p.z() > center.z() ? 4 : 0);
}

double min_squared_distance(const Vec3& q, const Vec3& center, double half) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = std::abs(q[a] - center[a]) - half;
    if (d > 0.0) d2 += d * d;
  }
  return d2;
}

double max_squared_distance(const Vec3& q, const Vec3& center, double half) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = std::abs(q[a] - center[a]) + half;
    d2 += d * d;
  }
  return d2;
}

// Criterion 1: the ball and the octant are disjoint.
bool ball_misses(const Vec3& q, double r2, const Vec3& center, double half) {
  return min_squared_distance(q, center, half) > r2 * (1.0 + kSlack) + 1e-300;
}

// Criterion 3: the ball covers the whole octant.
bool ball_contains(const Vec3& q, double r2, const Vec3& center, double half) {
  return max_squared_distance(q, center, half) < r2 * (1.0 - kSlack);
}

// Criterion 2: the ball lies strictly inside the octant.
bool ball_inside(const Vec3& q, double r, const Vec3& center, double half) {
  const double margin = r * (1.0 + kSlack) + 1e-300;
  for (int a = 0; a < 3; ++a) {
    if (q[a] - (center[a] - half) <= margin) return false;
    if ((center[a] + half) - q[a] <= margin) return false;
  }
  return true;
}

}  // namespace

struct Octree::KnnHeap {
  using Entry = std::pair<double, PointIndex>;
  std::size_t k = 0;
  std::vector<Entry> entries;  // max-heap on (d2, index)

  bool full() const { return entries.size() == k; }
  double worst() const {
    return full() ? entries.front().first : std::numeric_limits<double>::infinity();
  }
  void offer(double d2, PointIndex i) {
    const Entry e{d2, i};
    if (!full()) {
      entries.push_back(e);
      std::push_heap(entries.begin(), entries.end());
    } else if (e < entries.front()) {
      std::pop_heap(entries.begin(), entries.end());
      entries.back() = e;
      std::push_heap(entries.begin(), entries.end());
    }
  }
};

Octree Octree::build(std::span<const Vec3> points, OctreeParams params) {
  if (points.empty()) throw Error(ErrorKind::EmptyIndex, "cannot build an octree over zero points");
  if (points.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::Bounds, "octree supports at most 2^32-1 points");
  }
  if (params.leaf_capacity == 0) params.leaf_capacity = 1;

  Octree tree;
  tree.params_ = params;
  tree.points_.assign(points.begin(), points.end());
  Vec3 lo = tree.points_.front();
  Vec3 hi = lo;
  for (const auto& p : tree.points_) {
    if (!p.allFinite()) throw Error(ErrorKind::Data, "octree input contains a non-finite coordinate");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo).maxCoeff() + 1e-6;

  const auto n = static_cast<std::uint32_t>(tree.points_.size());
  tree.order_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) tree.order_[i] = i;
  std::vector<PointIndex> scratch(n);
  tree.nodes_.reserve(2 * (n / params.leaf_capacity + 1));
  tree.build_node(center, half, 0, n, 0, scratch);
  return tree;
}

std::int32_t Octree::build_node(const Vec3& center, double half, std::uint32_t begin,
                                std::uint32_t end, std::size_t depth,
                                std::vector<PointIndex>& scratch) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{center, half, begin, end, {}, true});
  nodes_.back().child.fill(-1);
  depth_ = std::max(depth_, depth);
  if (end - begin <= params_.leaf_capacity || depth >= params_.max_depth) return id;

  std::array<std::uint32_t, 9> offsets{};
  for (std::uint32_t i = begin; i < end; ++i) ++offsets[octant_of(points_[order_[i]], center) + 1];
  for (int o = 0; o < 8; ++o) offsets[o + 1] += offsets[o];
  std::array<std::uint32_t, 8> cursor{};
  for (int o = 0; o < 8; ++o) cursor[o] = begin + offsets[o];
  for (std::uint32_t i = begin; i < end; ++i) {
    const PointIndex p = order_[i];
    scratch[cursor[octant_of(points_[p], center)]++] = p;
  }
  std::copy(scratch.begin() + begin, scratch.begin() + end, order_.begin() + begin);

  nodes_[id].leaf = false;
  const double child_half = 0.5 * half;
  for (int o = 0; o < 8; ++o) {
    const std::uint32_t b = begin + offsets[o];
    const std::uint32_t e = begin + offsets[o + 1];
    if (b == e) continue;
    const Vec3 child_center(center.x() + ((o & 1) ? child_half : -child_half),
                            center.y() + ((o & 2) ? child_half : -child_half),
                            center.z() + ((o & 4) ? child_half : -child_half));
    const std::int32_t child = build_node(child_center, child_half, b, e, depth + 1, scratch);
    nodes_[id].child[o] = child;
  }
  return id;
}

std::vector<PointIndex> Octree::radius_query(const Vec3& center, double r, QueryStats* stats) const {
  QueryStats local;
  QueryStats& s = stats ? *stats : local;
  std::vector<PointIndex> out;
  if (!(r >= 0.0)) throw Error(ErrorKind::Bounds, "radius must be non-negative");
  const double r2 = r * r;
  const Node& root = nodes_.front();
  if (!ball_misses(center, r2, root.center, root.half)) radius_recursive(root, center, r, r2, out, s);
  std::sort(out.begin(), out.end());
  return out;
}

void Octree::radius_recursive(const Node& node, const Vec3& c, double r, double r2,
                              std::vector<PointIndex>& out, QueryStats& stats) const {
  ++stats.nodes_visited;
  if (ball_contains(c, r2, node.center, node.half)) {
    ++stats.bulk_accepted_nodes;
    out.insert(out.end(), order_.begin() + node.begin, order_.begin() + node.end);
    return;
  }
  if (node.leaf) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const PointIndex p = order_[i];
      ++stats.points_tested;
      if (squared_distance(points_[p], c) <= r2) out.push_back(p);
    }
    return;
  }
  for (const std::int32_t child : node.child) {
    if (child < 0) continue;
    const Node& ch = nodes_[static_cast<std::size_t>(child)];
    if (ball_misses(c, r2, ch.center, ch.half)) continue;
    radius_recursive(ch, c, r, r2, out, stats);
  }
}

std::vector<PointIndex> Octree::knn_query(const Vec3& center, std::size_t k, QueryStats* stats) const {
  if (k == 0 || k > points_.size()) {
    throw Error(ErrorKind::Bounds, "knn k=" + std::to_string(k) + " outside [1, " +
                                       std::to_string(points_.size()) + "]");
  }
  QueryStats local;
  QueryStats& s = stats ? *stats : local;
  KnnHeap heap;
  heap.k = k;
  heap.entries.reserve(k);
  s.early_terminated = knn_recursive(nodes_.front(), center, heap, s);
  std::sort(heap.entries.begin(), heap.entries.end());
  std::vector<PointIndex> out;
  out.reserve(k);
  for (const auto& e : heap.entries) out.push_back(e.second);
  return out;
}

bool Octree::knn_recursive(const Node& node, const Vec3& c, KnnHeap& heap, QueryStats& stats) const {
  ++stats.nodes_visited;
  if (node.leaf) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const PointIndex p = order_[i];
      ++stats.points_tested;
      heap.offer(squared_distance(points_[p], c), p);
    }
  } else {
    // Nearest child first, then the rest by their distance to the query.
    std::array<std::pair<double, int>, 8> order{};
    int count = 0;
    for (int o = 0; o < 8; ++o) {
      const std::int32_t child = node.child[o];
      if (child < 0) continue;
      const Node& ch = nodes_[static_cast<std::size_t>(child)];
      order[count++] = {min_squared_distance(c, ch.center, ch.half), o};
    }
    std::sort(order.begin(), order.begin() + count);
    for (int i = 0; i < count; ++i) {
      if (order[i].first > heap.worst()) break;
      const Node& ch = nodes_[static_cast<std::size_t>(node.child[order[i].second])];
      if (knn_recursive(ch, c, heap, stats)) return true;
    }
  }
  return heap.full() && ball_inside(c, std::sqrt(heap.worst()), node.center, node.half);
}

std::vector<std::vector<PointIndex>> Octree::leaves() const {
  std::vector<std::vector<PointIndex>> out;
  for (const auto& node : nodes_) {
    if (node.leaf) out.emplace_back(order_.begin() + node.begin, order_.begin() + node.end);
  }
  return out;
}

}  // namespace pcseg
