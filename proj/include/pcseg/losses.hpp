#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcseg/types.hpp"

namespace pcseg {

/// Row-major probability rows (n x c).
struct ProbRows {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// Natural-log Jensen-Shannon divergence, in [0, ln 2].
double js_divergence(std::span<const double> p, std::span<const double> q);

/// Rows compared by augmentation losses: all rows when sample_count >= rows,
/// otherwise sample_count distinct rows drawn with the given seed, ascending.
std::vector<std::size_t> sample_rows(std::size_t rows, std::size_t sample_count, std::uint64_t seed);

/// Mean JS divergence over sampled common rows.
double augmentation_loss(const ProbRows& a, const ProbRows& b, std::size_t sample_count = 1000,
                         std::uint64_t seed = 0);
/// Mean over sampled rows of the per-entry mean squared difference.
double mse_augmentation_loss(const ProbRows& a, const ProbRows& b, std::size_t sample_count = 1000,
                             std::uint64_t seed = 0);

/// mean(y d^2 + (1 - y) max(tau - d, 0)^2); labels are 1 for positive pairs.
double contrastive_loss(std::span<const double> d, std::span<const int> y, double tau);
/// mean(max(d_ap - d_an + rho, 0)).
double triplet_loss(std::span<const double> d_ap, std::span<const double> d_an, double rho);

struct OffsetLoss {
  double value = 0.0;
  std::size_t zero_norm_terms = 0;  // pairs whose direction term was dropped
};
/// mean(|o_t - o_t1| - cos(o_t, o_t1)); a zero vector drops the cosine part.
OffsetLoss offset_loss(std::span<const Vec3> o_t, std::span<const Vec3> o_t1);

struct CrossEntropy {
  double value = 0.0;
  bool empty_mask = false;
};
/// Mean -log p[label] over rows with mask set (all rows when mask is empty);
/// probabilities clipped at 1e-12.
CrossEntropy cross_entropy(const ProbRows& pred, std::span<const ClassId> labels,
                           std::span<const std::uint8_t> mask = {});

/// 1 - 2 sum(p g) / (sum p + sum g); 0 when both are empty.
double dice_loss(std::span<const double> pred, std::span<const std::uint8_t> gt);

/// Mean binary cross-entropy over classes, probabilities clipped at 1e-12.
double class_presence_loss(std::span<const double> pred, std::span<const std::uint8_t> gt);

}  // namespace pcseg
