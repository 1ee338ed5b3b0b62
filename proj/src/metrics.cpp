#include "pcseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pcseg/error.hpp"

namespace pcseg {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) +
         std::accumulate(unassigned.begin(), unassigned.end(), std::uint64_t{0});
}

ConfusionMatrix confusion_matrix(std::span<const ClassId> pred, std::span<const ClassId> gt, int classes) {
  if (pred.size() != gt.size()) throw Error(ErrorKind::Shape, "prediction and ground truth differ in length");
  if (classes < 0) throw Error(ErrorKind::Bounds, "negative class count");
  ConfusionMatrix m;
  m.classes = classes;
  m.counts.assign(static_cast<std::size_t>(classes) * classes, 0);
  m.unassigned.assign(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gt[i] == kUnlabeled) continue;
    if (gt[i] < 0 || gt[i] >= classes || pred[i] < kUnlabeled || pred[i] >= classes) {
      throw Error(ErrorKind::Bounds, "class id outside [0, " + std::to_string(classes) + ") at point " +
                                         std::to_string(i));
    }
    if (pred[i] == kUnlabeled) {
      ++m.unassigned[static_cast<std::size_t>(gt[i])];
    } else {
      ++m.counts[static_cast<std::size_t>(gt[i]) * classes + pred[i]];
    }
  }
  return m;
}

MiouResult miou(const ConfusionMatrix& conf) {
  MiouResult r;
  const int c = conf.classes;
  r.iou.assign(static_cast<std::size_t>(c), std::nan(""));
  r.valid.assign(static_cast<std::size_t>(c), 0);
  double sum = 0.0;
  int counted = 0;
  for (int k = 0; k < c; ++k) {
    const std::uint64_t tp = conf.at(k, k);
    std::uint64_t fp = 0;
    std::uint64_t fn = conf.unassigned[static_cast<std::size_t>(k)];
    for (int j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += conf.at(j, k);
      fn += conf.at(k, j);
    }
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) continue;
    r.iou[static_cast<std::size_t>(k)] = static_cast<double>(tp) / static_cast<double>(denom);
    r.valid[static_cast<std::size_t>(k)] = 1;
    sum += r.iou[static_cast<std::size_t>(k)];
    ++counted;
  }
  r.miou = counted > 0 ? sum / counted : 0.0;
  return r;
}

double point_iou(std::span<const PointIndex> a, std::span<const PointIndex> b) {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

ApResult instance_ap50(const std::vector<InstanceSet>& pred, const std::vector<InstanceSet>& gt) {
  ApResult result;
  std::map<ClassId, std::vector<const InstanceSet*>> gt_by_class;
  for (const auto& g : gt) gt_by_class[g.class_id].push_back(&g);

  double sum = 0.0;
  for (const auto& [cls, gts] : gt_by_class) {
    std::vector<const InstanceSet*> preds;
    for (const auto& p : pred) {
      if (p.class_id == cls) preds.push_back(&p);
    }
    std::stable_sort(preds.begin(), preds.end(),
                     [](const InstanceSet* a, const InstanceSet* b) { return a->score > b->score; });
    std::vector<std::uint8_t> used(gts.size(), 0);
    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
      double best = 0.5;
      std::ptrdiff_t match = -1;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g]) continue;
        const double iou = point_iou(preds[k]->points, gts[g]->points);
        if (iou >= best) {
          best = iou;
          match = static_cast<std::ptrdiff_t>(g);
        }
      }
      if (match >= 0) {
        used[static_cast<std::size_t>(match)] = 1;
        ++tp;
      }
      precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
      recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
    }
    // All-point interpolation: precision envelope integrated over recall steps.
    for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
      ap += (recall[k] - prev_recall) * precision[k];
      prev_recall = recall[k];
    }
    result.classes.push_back(cls);
    result.ap.push_back(ap);
    sum += ap;
  }
  result.mean_ap = result.ap.empty() ? 0.0 : sum / static_cast<double>(result.ap.size());
  return result;
}

std::vector<InstanceSet> instances_from_labels(std::span<const ClassId> classes,
                                               std::span<const std::int32_t> instances,
                                               std::span<const double> scores) {
  if (classes.size() != instances.size()) throw Error(ErrorKind::Shape, "class and instance columns differ");
  std::map<std::pair<ClassId, std::int32_t>, InstanceSet> groups;
  std::map<std::pair<ClassId, std::int32_t>, double> score_sum;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == kUnlabeled || instances[i] < 0) continue;
    auto& g = groups[{classes[i], instances[i]}];
    g.class_id = classes[i];
    g.points.push_back(static_cast<PointIndex>(i));
    if (!scores.empty()) score_sum[{classes[i], instances[i]}] += scores[i];
  }
  std::vector<InstanceSet> out;
  for (auto& [key, g] : groups) {
    if (!scores.empty()) g.score = score_sum[key] / static_cast<double>(g.points.size());
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<std::uint8_t> boundary_points(const Octree& tree, std::span<const std::int32_t> labels,
                                          double tolerance) {
  if (labels.size() != tree.size()) throw Error(ErrorKind::Shape, "labels do not match the octree");
  std::vector<std::uint8_t> out(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (PointIndex j : tree.radius_query(tree.point(static_cast<PointIndex>(i)), tolerance)) {
      if (labels[j] != labels[i]) {
        out[i] = 1;
        break;
      }
    }
  }
  return out;
}

namespace {

// Share of points flagged in `from` that have a point flagged in `to` within
// tolerance.
std::size_t matched(const Octree& tree, const std::vector<std::uint8_t>& from, const std::vector<std::uint8_t>& to,
                    double tolerance) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (!from[i]) continue;
    for (PointIndex j : tree.radius_query(tree.point(static_cast<PointIndex>(i)), tolerance)) {
      if (to[j]) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

}  // namespace

BoundaryPrf overseg_prf(const Octree& tree, std::span<const std::int32_t> regions,
                        std::span<const ClassId> gt, double tolerance) {
  if (regions.size() != gt.size()) throw Error(ErrorKind::Shape, "partition and ground truth differ in length");
  const auto gt_b = boundary_points(tree, gt, tolerance);
  const auto pred_b = boundary_points(tree, regions, tolerance);
  BoundaryPrf r;
  r.gt_boundary = static_cast<std::size_t>(std::count(gt_b.begin(), gt_b.end(), 1));
  r.pred_boundary = static_cast<std::size_t>(std::count(pred_b.begin(), pred_b.end(), 1));
  r.recall = r.gt_boundary == 0 ? 1.0
                                : static_cast<double>(matched(tree, gt_b, pred_b, tolerance)) /
                                      static_cast<double>(r.gt_boundary);
  if (r.pred_boundary == 0) {
    r.precision = r.gt_boundary == 0 ? 1.0 : 0.0;
  } else {
    r.precision = static_cast<double>(matched(tree, pred_b, gt_b, tolerance)) / static_cast<double>(r.pred_boundary);
  }
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace pcseg
