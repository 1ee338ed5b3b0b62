#include "pcseg/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "pcseg/error.hpp"
#include "pcseg/parallel.hpp"

namespace pcseg {

namespace {

constexpr double kPi = std::numbers::pi;

// Orders an unordered pair so the source is the point whose normal is closer
// to the connecting line; equal alignment keeps the lower index as source.
PairFeatures ordered_pair_features(const PointCloud& cloud, std::span<const LocalFrame> frames,
                                   PointIndex a, PointIndex b) {
  const Vec3& pa = cloud.positions[a];
  const Vec3& pb = cloud.positions[b];
  const Vec3& na = frames[a].normal;
  const Vec3& nb = frames[b].normal;
  const Vec3 dp = pb - pa;
  const bool swap = std::abs(na.dot(dp)) < std::abs(nb.dot(dp));
  const bool a_first = (a < b) != swap;
  return a_first ? pair_features(pa, na, pb, nb) : pair_features(pb, nb, pa, na);
}

void normalize_to_unit_sum(std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  if (sum > 0.0) {
    for (double& x : v) x /= sum;
  }
}

std::uint64_t pair_count(std::size_t n) { return n < 2 ? 0 : static_cast<std::uint64_t>(n) * (n - 1) / 2; }

Descriptor pfh_histogram(const PointCloud& cloud, std::span<const LocalFrame> frames,
                         const Octree& tree, PointIndex query, double radius, bool with_distance,
                         double distance_range, DescriptorStats* stats) {
  if (!(radius > 0.0)) throw Error(ErrorKind::Bounds, "descriptor radius must be positive");
  Descriptor desc;
  desc.kind = with_distance ? DescriptorKind::OriginalPfh : DescriptorKind::AdaptedPfh;
  desc.values.assign(descriptor_dim(desc.kind), 0.0);
  if (distance_range <= 0.0) distance_range = 2.0 * radius;

  const auto members = tree.radius_query(cloud.positions[query], radius);
  if (stats) stats->pair_evaluations.fetch_add(pair_count(members.size()), std::memory_order_relaxed);

  std::size_t binned = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (cloud.positions[members[i]] == cloud.positions[members[j]]) continue;
      const PairFeatures f = ordered_pair_features(cloud, frames, members[i], members[j]);
      int bin = (bin_index(f.alpha, -1.0, 1.0, kPfhBins) * kPfhBins +
                 bin_index(f.phi, -1.0, 1.0, kPfhBins)) *
                    kPfhBins +
                bin_index(f.theta, -kPi, kPi, kPfhBins);
      if (with_distance) bin = bin * kPfhBins + bin_index(f.distance, 0.0, distance_range, kPfhBins);
      desc.values[static_cast<std::size_t>(bin)] += 1.0;
      ++binned;
    }
  }
  if (binned == 0) {
    desc.isolated = true;
    return desc;
  }
  for (double& v : desc.values) v /= static_cast<double>(binned);
  return desc;
}

// Simplified histogram given the query's radius neighborhood.
Descriptor spfh_from_neighbors(const PointCloud& cloud, std::span<const LocalFrame> frames,
                               PointIndex query, std::span<const PointIndex> neighbors,
                               DescriptorStats* stats) {
  Descriptor desc;
  desc.kind = DescriptorKind::Fpfh;
  desc.values.assign(3 * kFpfhBins, 0.0);
  std::uint64_t evaluated = 0;
  std::size_t binned = 0;
  for (PointIndex j : neighbors) {
    if (j == query) continue;
    ++evaluated;
    if (cloud.positions[j] == cloud.positions[query]) continue;
    const PairFeatures f = ordered_pair_features(cloud, frames, query, j);
    desc.values[bin_index(f.alpha, -1.0, 1.0, kFpfhBins)] += 1.0;
    desc.values[kFpfhBins + bin_index(f.phi, -1.0, 1.0, kFpfhBins)] += 1.0;
    desc.values[2 * kFpfhBins + bin_index(f.theta, -kPi, kPi, kFpfhBins)] += 1.0;
    ++binned;
  }
  if (stats) stats->spfh_pair_evaluations.fetch_add(evaluated, std::memory_order_relaxed);
  if (binned == 0) {
    desc.isolated = true;
    return desc;
  }
  for (double& v : desc.values) v /= static_cast<double>(binned);
  return desc;
}

void fpfh_combine(const PointCloud& cloud, PointIndex query, std::span<const PointIndex> neighbors,
                  std::span<const double> own, bool own_isolated,
                  const std::function<std::span<const double>(PointIndex)>& spfh_of,
                  std::span<double> out, bool& isolated) {
  std::vector<double> pooled(out.size(), 0.0);
  double weight_sum = 0.0;
  for (PointIndex j : neighbors) {
    if (j == query) continue;
    const double d = std::sqrt(squared_distance(cloud.positions[j], cloud.positions[query]));
    if (d <= 0.0) continue;
    const double w = 1.0 / d;
    const auto h = spfh_of(j);
    for (std::size_t b = 0; b < pooled.size(); ++b) pooled[b] += w * h[b];
    weight_sum += w;
  }
  double total = 0.0;
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b] = own[b] + (weight_sum > 0.0 ? pooled[b] / weight_sum : 0.0);
    total += out[b];
  }
  isolated = own_isolated && total <= 0.0;
  if (total > 0.0) {
    for (double& v : out) v /= total;
  }
}

}  // namespace

PairFeatures pair_features(const Vec3& pc, const Vec3& n1, const Vec3& px, const Vec3& n2) {
  const Vec3 dp = px - pc;
  const double d = dp.norm();
  if (!(d > 0.0)) throw Error(ErrorKind::DegeneratePair, "pair features of coincident points");
  const Vec3 dir = dp / d;
  const Vec3& u = n1;
  Vec3 v = u.cross(dir);
  if (v.norm() < 1e-9) {
    int axis = 0;
    for (int a = 1; a < 3; ++a) {
      if (std::abs(u[a]) < std::abs(u[axis])) axis = a;
    }
    v = u.cross(Vec3::Unit(axis));
  }
  v.normalize();
  const Vec3 w = u.cross(v);

  PairFeatures f;
  f.alpha = std::clamp(v.dot(n2), -1.0, 1.0);
  f.phi = std::clamp(u.dot(dir), -1.0, 1.0);
  f.theta = std::atan2(w.dot(n2), u.dot(n2));
  f.beta = dir;
  f.distance = d;
  return f;
}

std::string_view to_string(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::AdaptedPfh: return "adapted-pfh";
    case DescriptorKind::OriginalPfh: return "original-pfh";
    case DescriptorKind::Fpfh: return "fpfh";
    case DescriptorKind::External: return "external";
  }
  return "unknown";
}

DescriptorKind descriptor_kind_from_string(std::string_view name) {
  if (name == "adapted-pfh") return DescriptorKind::AdaptedPfh;
  if (name == "original-pfh") return DescriptorKind::OriginalPfh;
  if (name == "fpfh") return DescriptorKind::Fpfh;
  if (name == "external") return DescriptorKind::External;
  throw Error(ErrorKind::Usage, "unknown descriptor kind '" + std::string(name) + "'");
}

std::size_t descriptor_dim(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::AdaptedPfh: return kPfhBins * kPfhBins * kPfhBins;
    case DescriptorKind::OriginalPfh: return kPfhBins * kPfhBins * kPfhBins * kPfhBins;
    case DescriptorKind::Fpfh: return 3 * kFpfhBins;
    case DescriptorKind::External: return 0;
  }
  return 0;
}

bool is_histogram(DescriptorKind kind) { return kind != DescriptorKind::External; }

int bin_index(double value, double lo, double hi, int bins) {
  const double t = (value - lo) / (hi - lo) * bins;
  if (!(t > 0.0)) return 0;
  const int b = static_cast<int>(std::floor(t));
  return std::min(b, bins - 1);
}

Descriptor DescriptorMatrix::descriptor(std::size_t i) const {
  Descriptor d;
  d.kind = kind;
  const auto r = row(i);
  d.values.assign(r.begin(), r.end());
  d.isolated = i < isolated.size() && isolated[i] != 0;
  return d;
}

Descriptor adapted_pfh(const PointCloud& cloud, std::span<const LocalFrame> frames,
                       const Octree& tree, PointIndex query, double radius, DescriptorStats* stats) {
  return pfh_histogram(cloud, frames, tree, query, radius, false, 0.0, stats);
}

Descriptor original_pfh(const PointCloud& cloud, std::span<const LocalFrame> frames,
                        const Octree& tree, PointIndex query, double radius, DescriptorStats* stats,
                        double distance_range) {
  return pfh_histogram(cloud, frames, tree, query, radius, true, distance_range, stats);
}

Descriptor simplified_pfh(const PointCloud& cloud, std::span<const LocalFrame> frames,
                          const Octree& tree, PointIndex query, double radius,
                          DescriptorStats* stats) {
  if (!(radius > 0.0)) throw Error(ErrorKind::Bounds, "descriptor radius must be positive");
  const auto neighbors = tree.radius_query(cloud.positions[query], radius);
  return spfh_from_neighbors(cloud, frames, query, neighbors, stats);
}

Descriptor fpfh(const PointCloud& cloud, std::span<const LocalFrame> frames, const Octree& tree,
                PointIndex query, double radius, DescriptorStats* stats) {
  if (!(radius > 0.0)) throw Error(ErrorKind::Bounds, "descriptor radius must be positive");
  const auto neighbors = tree.radius_query(cloud.positions[query], radius);
  const Descriptor own = spfh_from_neighbors(cloud, frames, query, neighbors, stats);
  std::vector<Descriptor> cache;
  cache.reserve(neighbors.size());
  std::vector<PointIndex> cache_ids;
  for (PointIndex j : neighbors) {
    if (j == query) continue;
    cache.push_back(simplified_pfh(cloud, frames, tree, j, radius, stats));
    cache_ids.push_back(j);
  }
  auto lookup = [&](PointIndex j) -> std::span<const double> {
    const auto it = std::lower_bound(cache_ids.begin(), cache_ids.end(), j);
    return cache[static_cast<std::size_t>(it - cache_ids.begin())].values;
  };
  Descriptor out;
  out.kind = DescriptorKind::Fpfh;
  out.values.assign(3 * kFpfhBins, 0.0);
  fpfh_combine(cloud, query, neighbors, own.values, own.isolated, lookup, out.values, out.isolated);
  return out;
}

DescriptorMatrix compute_descriptors(const PointCloud& cloud, std::span<const LocalFrame> frames,
                                     const Octree& tree, DescriptorKind kind, double radius,
                                     DescriptorStats* stats, double distance_range) {
  if (kind == DescriptorKind::External) {
    throw Error(ErrorKind::Usage, "external descriptors are loaded, not computed");
  }
  if (frames.size() != cloud.size() || tree.size() != cloud.size()) {
    throw Error(ErrorKind::Shape, "frames, octree and cloud sizes differ");
  }
  DescriptorMatrix m;
  m.kind = kind;
  m.rows = cloud.size();
  m.cols = descriptor_dim(kind);
  m.data.assign(m.rows * m.cols, 0.0);
  m.isolated.assign(m.rows, 0);

  if (kind != DescriptorKind::Fpfh) {
    parallel_for(m.rows, [&](std::size_t i) {
      const auto q = static_cast<PointIndex>(i);
      const Descriptor d = kind == DescriptorKind::AdaptedPfh
                               ? adapted_pfh(cloud, frames, tree, q, radius, stats)
                               : original_pfh(cloud, frames, tree, q, radius, stats, distance_range);
      std::copy(d.values.begin(), d.values.end(), m.row(i).begin());
      m.isolated[i] = d.isolated ? 1 : 0;
    });
    return m;
  }

  if (!(radius > 0.0)) throw Error(ErrorKind::Bounds, "descriptor radius must be positive");
  DescriptorMatrix spfh = m;
  parallel_for(m.rows, [&](std::size_t i) {
    const auto q = static_cast<PointIndex>(i);
    const auto neighbors = tree.radius_query(cloud.positions[q], radius);
    const Descriptor d = spfh_from_neighbors(cloud, frames, q, neighbors, stats);
    std::copy(d.values.begin(), d.values.end(), spfh.row(i).begin());
    spfh.isolated[i] = d.isolated ? 1 : 0;
  });
  parallel_for(m.rows, [&](std::size_t i) {
    const auto q = static_cast<PointIndex>(i);
    const auto neighbors = tree.radius_query(cloud.positions[q], radius);
    bool isolated = false;
    fpfh_combine(cloud, q, neighbors, spfh.row(i), spfh.isolated[i] != 0,
                 [&](PointIndex j) { return spfh.row(j); }, m.row(i), isolated);
    m.isolated[i] = isolated ? 1 : 0;
  });
  return m;
}

Descriptor region_descriptor(const DescriptorMatrix& descriptors, std::span<const PointIndex> members) {
  if (members.empty()) throw Error(ErrorKind::Bounds, "region has no members");
  Descriptor d;
  d.kind = descriptors.kind;
  d.values.assign(descriptors.cols, 0.0);
  for (PointIndex i : members) {
    const auto r = descriptors.row(i);
    for (std::size_t b = 0; b < r.size(); ++b) d.values[b] += r[b];
  }
  const double n = static_cast<double>(members.size());
  for (double& v : d.values) v /= n;
  if (is_histogram(d.kind)) normalize_to_unit_sum(d.values);
  d.isolated = std::all_of(d.values.begin(), d.values.end(), [](double v) { return v == 0.0; });
  return d;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Shape, "cosine of vectors with different lengths");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double descriptor_cosine(const Descriptor& a, const Descriptor& b) {
  if (a.kind != b.kind || a.dim() != b.dim()) {
    throw Error(ErrorKind::Shape, "descriptor kind or dimension mismatch");
  }
  return cosine(a.values, b.values);
}

}  // namespace pcseg
