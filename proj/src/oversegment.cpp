#include "pcseg/oversegment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

#include "pcseg/error.hpp"
#include "pcseg/labels_io.hpp"

namespace pcseg {

void Region::add_point(const PointCloud& cloud, std::span<const LocalFrame> frames,
                       const DescriptorMatrix& descriptors, PointIndex i) {
  members.push_back(i);
  acc.add(cloud, frames, i);
  if (descriptor_sum.empty()) descriptor_sum.assign(descriptors.cols, 0.0);
  const auto row = descriptors.row(i);
  for (std::size_t b = 0; b < row.size(); ++b) descriptor_sum[b] += row[b];
}

void Region::absorb(Region& other) {
  members.insert(members.end(), other.members.begin(), other.members.end());
  acc.merge(other.acc);
  if (descriptor_sum.empty()) descriptor_sum.assign(other.descriptor_sum.size(), 0.0);
  for (std::size_t b = 0; b < other.descriptor_sum.size(); ++b) descriptor_sum[b] += other.descriptor_sum[b];
  other.members.clear();
  other.members.shrink_to_fit();
  other.acc = RegionAccumulator{};
  other.descriptor_sum.clear();
}

Descriptor Region::descriptor(DescriptorKind kind) const {
  Descriptor d;
  d.kind = kind;
  d.values = descriptor_sum;
  double total = 0.0;
  for (double v : d.values) total += v;
  if (is_histogram(kind)) {
    if (total > 0.0) {
      for (double& v : d.values) v /= total;
    }
  } else if (!members.empty()) {
    for (double& v : d.values) v /= static_cast<double>(members.size());
  }
  d.isolated = std::all_of(d.values.begin(), d.values.end(), [](double v) { return v == 0.0; });
  return d;
}

std::vector<PointIndex> select_seeds(std::span<const LocalFrame> frames, const WeakLabelSet& weak,
                                     double seed_fraction) {
  const std::size_t n = frames.size();
  std::vector<PointIndex> seeds;
  for (const auto& e : weak.entries) {
    if (e.point >= n) throw Error(ErrorKind::Bounds, "weak label index outside the cloud");
    seeds.push_back(e.point);
  }
  const auto extra = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(seed_fraction * static_cast<double>(n) - 1e-9)));
  if (extra > 0) {
    std::vector<PointIndex> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<PointIndex>(i);
    auto less = [&](PointIndex a, PointIndex b) {
      if (frames[a].curvature != frames[b].curvature) return frames[a].curvature < frames[b].curvature;
      return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(extra), order.end(), less);
    seeds.insert(seeds.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(extra));
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  return seeds;
}

double affinity(const RegionSummary& a, std::span<const double> desc_a, const RegionSummary& b,
                std::span<const double> desc_b, double lambda_n, double lambda_des) {
  if (a.degenerate || b.degenerate) return 0.0;
  const double an = std::max(0.0, a.normal.dot(b.normal));
  const double ad = std::max(0.0, cosine(desc_a, desc_b));
  return std::sqrt(lambda_n * an * an + lambda_des * ad * ad);
}

double affinity(const Region& a, const Region& b, double lambda_n, double lambda_des) {
  return affinity(a.summary(), a.descriptor_sum, b.summary(), b.descriptor_sum, lambda_n, lambda_des);
}

bool passes_affinity_gate(const RegionSummary& region, std::span<const double> region_desc,
                          const RegionSummary& point, std::span<const double> point_desc,
                          const SceneConfig& config) {
  if (region.degenerate || point.degenerate) return false;
  const double cos_th = std::cos(config.theta_th * std::numbers::pi / 180.0);
  const double an = std::max(0.0, region.normal.dot(point.normal));
  if (an < cos_th) return false;
  const double a = affinity(region, region_desc, point, point_desc, config.lambda_n, config.lambda_des);
  return a >= cos_th * std::sqrt(config.lambda_n + config.lambda_des);
}

Partition grow(const PointCloud& cloud, std::span<const LocalFrame> frames,
               const DescriptorMatrix& descriptors, const Octree& tree,
               std::span<const PointIndex> seeds, const SceneConfig& config, GrowStats* stats) {
  const std::size_t n = cloud.size();
  if (frames.size() != n || descriptors.rows != n || tree.size() != n) {
    throw Error(ErrorKind::Shape, "grow inputs disagree on point count");
  }
  if (seeds.empty()) throw Error(ErrorKind::Bounds, "grow needs at least one seed");

  Partition part;
  part.point_region.assign(n, kNoRegion);
  std::size_t assigned = 0;

  auto new_region = [&](PointIndex p) {
    Region r;
    r.id = static_cast<RegionId>(part.regions.size());
    r.add_point(cloud, frames, descriptors, p);
    part.point_region[p] = r.id;
    part.regions.push_back(std::move(r));
    ++assigned;
    return part.regions.back().id;
  };

  struct Active {
    RegionId region;
    PointIndex point;
  };
  std::vector<Active> active;
  for (PointIndex s : seeds) {
    if (s >= n) throw Error(ErrorKind::Bounds, "seed index outside the cloud");
    if (part.point_region[s] != kNoRegion) continue;
    const RegionId id = new_region(s);
    part.regions[id].is_seed = true;
    active.push_back({id, s});
  }

  std::size_t sweeps = 0;
  std::vector<std::pair<double, PointIndex>> candidates;
  while (assigned < n && !active.empty()) {
    ++sweeps;
    bool changed = false;
    std::vector<Active> next;
    for (const Active& a : active) {
      const Vec3& c = cloud.positions[a.point];
      candidates.clear();
      for (PointIndex q : tree.radius_query(c, config.radius)) {
        if (part.point_region[q] == kNoRegion) candidates.emplace_back(squared_distance(cloud.positions[q], c), q);
      }
      std::sort(candidates.begin(), candidates.end());
      if (candidates.size() > config.knn) candidates.resize(config.knn);

      for (const auto& [d2, q] : candidates) {
        if (part.point_region[q] != kNoRegion) continue;
        Region& region = part.regions[a.region];
        const RegionSummary rs = region.summary();
        RegionSummary ps;
        ps.normal = frames[q].normal;
        ps.curvature = frames[q].curvature;
        ps.degenerate = frames[q].degenerate;
        ps.size = 1;
        if (passes_affinity_gate(rs, region.descriptor_sum, ps, descriptors.row(q), config)) {
          region.add_point(cloud, frames, descriptors, q);
          part.point_region[q] = a.region;
          ++assigned;
          if (std::abs(frames[q].curvature - rs.curvature) <= config.zeta) next.push_back({a.region, q});
        } else {
          const RegionId id = new_region(q);
          part.regions[id].is_seed = true;
          next.push_back({id, q});
        }
        changed = true;
      }
    }
    std::stable_sort(next.begin(), next.end(),
                     [](const Active& x, const Active& y) { return x.region < y.region; });
    active = std::move(next);
    if (!changed) break;
  }

  std::size_t leftover = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (part.point_region[i] == kNoRegion) {
      new_region(static_cast<PointIndex>(i));
      ++leftover;
    }
  }
  if (stats) {
    stats->sweeps = sweeps;
    stats->leftover_points = leftover;
  }
  return part;
}

void initial_pseudo_labels(Partition& partition, const WeakLabelSet& weak) {
  std::vector<std::map<ClassId, std::size_t>> votes(partition.regions.size());
  for (const auto& e : weak.entries) {
    if (e.point >= partition.point_region.size()) throw Error(ErrorKind::Bounds, "weak label index outside the cloud");
    const RegionId r = partition.point_region[e.point];
    if (r == kNoRegion || e.class_id < 0) continue;
    ++votes[static_cast<std::size_t>(r)][e.class_id];
  }
  auto frequency = [&](ClassId c) -> std::size_t {
    return static_cast<std::size_t>(c) < weak.class_frequency.size() ? weak.class_frequency[c] : 0;
  };
  for (auto& region : partition.regions) {
    const auto& v = votes[static_cast<std::size_t>(region.id)];
    if (v.empty()) {
      region.state = LabelState::Unlabeled;
      region.class_id = kUnlabeled;
      region.confidence = 0.0;
      continue;
    }
    ClassId best = kUnlabeled;
    std::size_t best_votes = 0;
    for (const auto& [c, count] : v) {
      if (best == kUnlabeled || count > best_votes ||
          (count == best_votes && frequency(c) > frequency(best))) {
        best = c;
        best_votes = count;
      }
    }
    region.state = LabelState::Weak;
    region.class_id = best;
    region.confidence = 1.0;
  }
}

std::vector<PointAssignment> to_assignments(const Partition& partition) {
  std::vector<PointAssignment> out(partition.num_points());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const RegionId r = partition.point_region[i];
    out[i].region = r;
    if (r == kNoRegion) continue;
    const Region& region = partition.regions[static_cast<std::size_t>(r)];
    out[i].class_id = region.class_id;
    out[i].confidence = region.class_id == kUnlabeled ? 0.0 : region.confidence;
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  file << text;
  if (!file) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace

void save_partition(const Partition& partition, const std::filesystem::path& path) {
  std::string out;
  out.reserve(partition.num_points() * 12);
  for (std::size_t i = 0; i < partition.num_points(); ++i) {
    out += std::to_string(i) + ' ' + std::to_string(partition.point_region[i]) + '\n';
  }
  write_text(path, out);
}

void save_region_table(const Partition& partition, const std::filesystem::path& path) {
  std::string out = "region_id size class confidence nx ny nz curvature\n";
  char buf[256];
  for (const auto& r : partition.regions) {
    if (r.members.empty()) continue;
    const RegionSummary s = r.summary();
    std::snprintf(buf, sizeof buf, "%d %zu %d %.6g %.6g %.6g %.6g %.6g\n", r.id, r.members.size(), r.class_id,
                  r.confidence, s.normal.x(), s.normal.y(), s.normal.z(), s.curvature);
    out += buf;
  }
  write_text(path, out);
}

}  // namespace pcseg
