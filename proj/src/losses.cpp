#include "pcseg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pcseg/error.hpp"
#include "pcseg/random.hpp"

namespace pcseg {

namespace {

constexpr double kClip = 1e-12;

double xlogy_ratio(double x, double m) { return x > 0.0 ? x * std::log(x / m) : 0.0; }

void check_same(const ProbRows& a, const ProbRows& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw Error(ErrorKind::Shape, "prediction matrices differ in shape");
}

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorKind::Shape, "JS divergence of vectors with different lengths");
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    kl_p += xlogy_ratio(p[i], m);
    kl_q += xlogy_ratio(q[i], m);
  }
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, std::log(2.0));
}

std::vector<std::size_t> sample_rows(std::size_t rows, std::size_t sample_count, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (sample_count >= rows) {
    out.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) out[i] = i;
    return out;
  }
  Rng rng(seed);
  for (auto i : sample_without_replacement(rng, static_cast<std::uint32_t>(rows),
                                           static_cast<std::uint32_t>(sample_count))) {
    out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double augmentation_loss(const ProbRows& a, const ProbRows& b, std::size_t sample_count, std::uint64_t seed) {
  check_same(a, b);
  const auto idx = sample_rows(a.rows, sample_count, seed);
  if (idx.empty()) return 0.0;
  double sum = 0.0;
  for (auto i : idx) sum += js_divergence(a.row(i), b.row(i));
  return sum / static_cast<double>(idx.size());
}

double mse_augmentation_loss(const ProbRows& a, const ProbRows& b, std::size_t sample_count,
                             std::uint64_t seed) {
  check_same(a, b);
  const auto idx = sample_rows(a.rows, sample_count, seed);
  if (idx.empty() || a.cols == 0) return 0.0;
  double sum = 0.0;
  for (auto i : idx) {
    const auto ra = a.row(i);
    const auto rb = b.row(i);
    double row = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) row += (ra[c] - rb[c]) * (ra[c] - rb[c]);
    sum += row / static_cast<double>(a.cols);
  }
  return sum / static_cast<double>(idx.size());
}

double contrastive_loss(std::span<const double> d, std::span<const int> y, double tau) {
  if (d.size() != y.size()) throw Error(ErrorKind::Shape, "distances and labels differ in length");
  if (d.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double hinge = std::max(tau - d[i], 0.0);
    sum += y[i] != 0 ? d[i] * d[i] : hinge * hinge;
  }
  return sum / static_cast<double>(d.size());
}

double triplet_loss(std::span<const double> d_ap, std::span<const double> d_an, double rho) {
  if (d_ap.size() != d_an.size()) throw Error(ErrorKind::Shape, "anchor distance lists differ in length");
  if (d_ap.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < d_ap.size(); ++i) sum += std::max(d_ap[i] - d_an[i] + rho, 0.0);
  return sum / static_cast<double>(d_ap.size());
}

OffsetLoss offset_loss(std::span<const Vec3> o_t, std::span<const Vec3> o_t1) {
  if (o_t.size() != o_t1.size()) throw Error(ErrorKind::Shape, "offset lists differ in length");
  OffsetLoss out;
  if (o_t.empty()) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < o_t.size(); ++i) {
    sum += (o_t[i] - o_t1[i]).norm();
    const double na = o_t[i].norm();
    const double nb = o_t1[i].norm();
    if (na > 0.0 && nb > 0.0) {
      sum -= (o_t[i] / na).dot(o_t1[i] / nb);
    } else {
      ++out.zero_norm_terms;
    }
  }
  out.value = sum / static_cast<double>(o_t.size());
  return out;
}

CrossEntropy cross_entropy(const ProbRows& pred, std::span<const ClassId> labels,
                           std::span<const std::uint8_t> mask) {
  if (labels.size() != pred.rows) throw Error(ErrorKind::Shape, "label count differs from prediction rows");
  if (!mask.empty() && mask.size() != pred.rows) throw Error(ErrorKind::Shape, "mask length differs from rows");
  CrossEntropy out;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.rows; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const ClassId c = labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= pred.cols) {
      throw Error(ErrorKind::Bounds, "label " + std::to_string(c) + " outside the prediction columns");
    }
    sum -= std::log(std::max(pred.row(i)[static_cast<std::size_t>(c)], kClip));
    ++count;
  }
  if (count == 0) {
    out.empty_mask = true;
    return out;
  }
  out.value = sum / static_cast<double>(count);
  return out;
}

double dice_loss(std::span<const double> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) throw Error(ErrorKind::Shape, "mask lengths differ");
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_g = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double g = gt[i] ? 1.0 : 0.0;
    inter += pred[i] * g;
    sum_p += pred[i];
    sum_g += g;
  }
  if (sum_p + sum_g == 0.0) return 0.0;
  return 1.0 - 2.0 * inter / (sum_p + sum_g);
}

double class_presence_loss(std::span<const double> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) throw Error(ErrorKind::Shape, "presence vectors differ in length");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum -= std::log(std::max(gt[i] ? pred[i] : 1.0 - pred[i], kClip));
  }
  return sum / static_cast<double>(pred.size());
}

}  // namespace pcseg
