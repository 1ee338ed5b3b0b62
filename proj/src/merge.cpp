#include "pcseg/merge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "pcseg/error.hpp"

namespace pcseg {

PredictionMatrix PredictionMatrix::uniform(std::size_t rows, std::size_t cols) {
  PredictionMatrix p;
  p.rows = rows;
  p.cols = cols;
  p.data.assign(rows * cols, cols > 0 ? 1.0 / static_cast<double>(cols) : 0.0);
  return p;
}

void PredictionMatrix::validate() const {
  if (data.size() != rows * cols) throw Error(ErrorKind::Shape, "prediction data size does not match rows * cols");
  for (std::size_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (double v : row(i)) {
      if (!(v >= 0.0)) throw Error(ErrorKind::Data, "prediction row " + std::to_string(i) + " has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorKind::Data, "prediction row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

double row_confidence(std::span<const double> row) {
  return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
}

MergeState MergeState::init(const PointCloud& cloud, std::span<const LocalFrame> frames,
                            const DescriptorMatrix& descriptors, Partition partition, int num_classes) {
  if (partition.num_points() != cloud.size()) throw Error(ErrorKind::Shape, "partition does not match the cloud");
  MergeState s;
  s.cloud = &cloud;
  s.frames = frames;
  s.descriptors = &descriptors;
  s.partition = std::move(partition);
  s.num_classes = num_classes;
  const std::size_t r = s.partition.regions.size();
  s.live.assign(r, 0);
  s.frozen.assign(r, 0);
  s.excluded.assign(r, 0);
  for (const auto& region : s.partition.regions) {
    s.live[region.id] = region.members.empty() ? 0 : 1;
    s.frozen[region.id] = region.state == LabelState::Weak ? 1 : 0;
  }
  return s;
}

std::vector<RegionId> MergeState::row_regions() const {
  std::vector<RegionId> out;
  for (std::size_t r = 0; r < live.size(); ++r) {
    if (active(static_cast<RegionId>(r))) out.push_back(static_cast<RegionId>(r));
  }
  return out;
}

std::vector<PointAssignment> MergeState::assignments() const {
  auto out = to_assignments(partition);
  for (auto& a : out) {
    if (a.region != kNoRegion && excluded[a.region]) {
      a.class_id = kUnlabeled;
      a.confidence = 0.0;
    }
  }
  return out;
}

SimilarityTerms similarity_terms(const RegionSummary& a, std::span<const double> desc_a,
                                 std::span<const double> pred_a, const RegionSummary& b,
                                 std::span<const double> desc_b, std::span<const double> pred_b,
                                 double lambda_seg) {
  SimilarityTerms t;
  t.des = std::max(0.0, cosine(desc_a, desc_b));
  if (a.mean_color && b.mean_color) {
    t.color = std::clamp(1.0 - (*a.mean_color - *b.mean_color).norm() / std::sqrt(3.0), 0.0, 1.0);
  } else {
    t.color = t.des;
  }
  const double lo = std::min(a.scale, b.scale);
  const double hi = std::max(a.scale, b.scale);
  t.scale = hi > 0.0 ? lo / hi : 1.0;
  if (pred_a.size() != pred_b.size()) throw Error(ErrorKind::Shape, "prediction rows differ in length");
  double d2 = 0.0;
  for (std::size_t c = 0; c < pred_a.size(); ++c) d2 += (pred_a[c] - pred_b[c]) * (pred_a[c] - pred_b[c]);
  t.seg = std::exp(-lambda_seg * d2);
  return t;
}

double similarity_score(const SimilarityTerms& t, std::size_t m, std::size_t n_total) {
  const double y4 = n_total > 0 ? static_cast<double>(m) / static_cast<double>(n_total) : 0.0;
  const double y = 1.0 - y4;
  return y * t.color + y * t.scale + y * t.des + y4 * t.seg;
}

double similarity_score(const MergeState& state, RegionId i, RegionId j, std::span<const double> pred_i,
                        std::span<const double> pred_j, std::size_t m, const SceneConfig& config) {
  const Region& a = state.partition.regions[i];
  const Region& b = state.partition.regions[j];
  const auto t = similarity_terms(a.summary(), a.descriptor_sum, pred_i, b.summary(), b.descriptor_sum, pred_j,
                                  config.lambda_seg);
  return similarity_score(t, m, config.iterations);
}

MergeDecision decide(double score, double conf_i, double conf_j, const SceneConfig& config) {
  if (!(score >= config.t_merge && conf_i >= config.gamma && conf_j >= config.gamma)) return MergeDecision::None;
  return score >= config.t_seed ? MergeDecision::Fuse : MergeDecision::Propagate;
}

StepStats merge_step(MergeState& state, const PredictionMatrix& pred, const SceneConfig& config) {
  const auto rows = state.row_regions();
  if (pred.rows != rows.size()) {
    throw Error(ErrorKind::Shape, "prediction has " + std::to_string(pred.rows) + " rows for " +
                                      std::to_string(rows.size()) + " live regions");
  }
  if (pred.data.size() != pred.rows * pred.cols) throw Error(ErrorKind::Shape, "prediction data size mismatch");
  StepStats stats;
  if (rows.empty()) return stats;

  auto& regions = state.partition.regions;
  std::vector<std::vector<double>> row_of(regions.size());
  std::vector<Vec3> centroids;
  centroids.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = pred.row(k);
    row_of[rows[k]].assign(r.begin(), r.end());
    centroids.push_back(regions[rows[k]].summary().centroid);
  }
  const Octree centroid_tree = Octree::build(centroids);
  const std::size_t k_query = std::min(rows.size(), config.knn + 1);

  std::vector<std::uint8_t> touched(regions.size(), 0);
  std::vector<RegionId> seeds;
  for (RegionId r : rows) {
    if (state.frozen[r] && regions[r].class_id != kUnlabeled) seeds.push_back(r);
  }

  for (RegionId seed : seeds) {
    if (!state.active(seed)) continue;
    const Vec3 c = regions[seed].summary().centroid;
    for (PointIndex slot : centroid_tree.knn_query(c, k_query)) {
      const RegionId nb = rows[slot];
      if (nb == seed || !state.active(nb) || state.frozen[nb] || touched[nb]) continue;
      const double score =
          similarity_score(state, seed, nb, row_of[seed], row_of[nb], pred.iteration, config);
      // The neighbor must be confident in the class it would receive.
      const double conf_nb = row_of[nb][static_cast<std::size_t>(regions[seed].class_id)];
      const MergeDecision d = decide(score, row_confidence(row_of[seed]), conf_nb, config);
      if (d == MergeDecision::None) continue;
      touched[nb] = 1;
      if (d == MergeDecision::Propagate) {
        regions[nb].state = LabelState::Pseudo;
        regions[nb].class_id = regions[seed].class_id;
        regions[nb].confidence = row_confidence(row_of[nb]);
        ++stats.propagated;
        continue;
      }
      const double ws = static_cast<double>(regions[seed].members.size());
      const double wn = static_cast<double>(regions[nb].members.size());
      for (std::size_t cidx = 0; cidx < row_of[seed].size(); ++cidx) {
        row_of[seed][cidx] = (ws * row_of[seed][cidx] + wn * row_of[nb][cidx]) / (ws + wn);
      }
      for (PointIndex p : regions[nb].members) state.partition.point_region[p] = seed;
      regions[seed].absorb(regions[nb]);
      regions[nb].state = LabelState::Unlabeled;
      regions[nb].class_id = kUnlabeled;
      regions[nb].confidence = 0.0;
      state.live[nb] = 0;
      ++stats.fused;
    }
  }
  state.iteration = pred.iteration;
  return stats;
}

void filter_small_regions(MergeState& state, std::size_t n_ths) {
  for (const auto& r : state.partition.regions) {
    if (state.live[r.id] && r.members.size() < n_ths) state.excluded[r.id] = 1;
  }
}

TraceRow label_quality(const MergeState& state) {
  TraceRow row;
  const auto labels = state.assignments();
  const std::size_t n = labels.size();
  std::size_t labeled = 0;
  std::size_t correct = 0;
  const auto* gt = state.cloud && state.cloud->gt_labels ? &*state.cloud->gt_labels : nullptr;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].class_id == kUnlabeled) continue;
    ++labeled;
    if (gt && (*gt)[i] == labels[i].class_id) ++correct;
  }
  row.labeled_fraction = n > 0 ? static_cast<double>(labeled) / static_cast<double>(n) : 0.0;
  if (gt) {
    row.pseudo_precision = labeled > 0 ? static_cast<double>(correct) / static_cast<double>(labeled) : 0.0;
    row.pseudo_recall = n > 0 ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
  }
  return row;
}

SelfTrainResult self_train(MergeState& state, RegionPredictor& predictor, const SceneConfig& config) {
  filter_small_regions(state, config.n_ths);
  SelfTrainResult result;
  for (std::size_t m = 1; m <= config.iterations; ++m) {
    PredictionMatrix pred = predictor.predict(state, m);
    pred.iteration = m;
    const std::size_t live = state.row_regions().size();
    if (pred.rows != live) {
      throw Error(ErrorKind::Shape, "iteration " + std::to_string(m) + ": predictor returned " +
                                        std::to_string(pred.rows) + " rows for " + std::to_string(live) +
                                        " live regions");
    }
    if (pred.cols != static_cast<std::size_t>(state.num_classes)) {
      throw Error(ErrorKind::Shape, "iteration " + std::to_string(m) + ": predictor returned " +
                                        std::to_string(pred.cols) + " classes, expected " +
                                        std::to_string(state.num_classes));
    }
    const StepStats s = merge_step(state, pred, config);
    TraceRow row = label_quality(state);
    row.iter = m;
    row.propagated = s.propagated;
    row.fused = s.fused;
    result.trace.push_back(row);
  }
  result.labels = state.assignments();
  return result;
}

void save_trace(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
  std::string out = "iter,labeled_fraction,pseudo_precision,pseudo_recall\n";
  char buf[160];
  auto opt = [](const std::optional<double>& v) { return v ? *v : std::nan(""); };
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%.6g\n", r.iter, r.labeled_fraction, opt(r.pseudo_precision),
                  opt(r.pseudo_recall));
    out += buf;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  file << out;
  if (!file) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::vector<InstanceBox> extract_instances(const MergeState& state, const Octree& tree, double radius) {
  const auto& part = state.partition;
  const std::size_t n = part.num_points();
  if (tree.size() != n) throw Error(ErrorKind::Shape, "octree does not match the partition");
  auto labeled = [&](RegionId r) {
    return r != kNoRegion && state.active(r) && part.regions[r].class_id != kUnlabeled;
  };

  std::vector<RegionId> parent(part.regions.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](RegionId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const RegionId ri = part.point_region[i];
    if (!labeled(ri)) continue;
    for (PointIndex j : tree.radius_query(tree.point(static_cast<PointIndex>(i)), radius)) {
      const RegionId rj = part.point_region[j];
      if (rj == ri || !labeled(rj) || part.regions[rj].class_id != part.regions[ri].class_id) continue;
      const RegionId a = find(ri);
      const RegionId b = find(rj);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }

  std::vector<int> box_of(part.regions.size(), -1);
  std::vector<InstanceBox> boxes;
  for (const auto& region : part.regions) {
    if (!labeled(region.id)) continue;
    const RegionId root = find(region.id);
    if (box_of[root] < 0) {
      box_of[root] = static_cast<int>(boxes.size());
      InstanceBox b;
      b.class_id = region.class_id;
      b.min = region.acc.bbox_min();
      b.max = region.acc.bbox_max();
      boxes.push_back(b);
    }
    InstanceBox& b = boxes[static_cast<std::size_t>(box_of[root])];
    b.min = b.min.cwiseMin(region.acc.bbox_min());
    b.max = b.max.cwiseMax(region.acc.bbox_max());
    b.members += region.members.size();
  }
  return boxes;
}

void save_boxes(const std::vector<InstanceBox>& boxes, const std::filesystem::path& path) {
  std::string out;
  char buf[256];
  for (const auto& b : boxes) {
    std::snprintf(buf, sizeof buf, "%d %.6g %.6g %.6g %.6g %.6g %.6g\n", b.class_id, b.min.x(), b.min.y(),
                  b.min.z(), b.max.x(), b.max.y(), b.max.z());
    out += buf;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  file << out;
  if (!file) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace pcseg
