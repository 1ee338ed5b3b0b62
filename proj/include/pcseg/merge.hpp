#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcseg/config.hpp"
#include "pcseg/labels_io.hpp"
#include "pcseg/oversegment.hpp"

namespace pcseg {

/// Per-region class probabilities for the live regions of a MergeState, rows
/// in ascending region id.
struct PredictionMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::size_t iteration = 0;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }

  static PredictionMatrix uniform(std::size_t rows, std::size_t cols);
  /// Throws Data unless every row is non-negative and sums to 1 within 1e-6.
  void validate() const;
};

double row_confidence(std::span<const double> row);

/// Regions keep their ids for the whole run. A region stops being live when
/// it is fused into another; excluded regions (too small) take no part.
struct MergeState {
  const PointCloud* cloud = nullptr;
  std::span<const LocalFrame> frames;
  const DescriptorMatrix* descriptors = nullptr;
  Partition partition;
  int num_classes = 0;
  std::vector<std::uint8_t> live;
  std::vector<std::uint8_t> frozen;
  std::vector<std::uint8_t> excluded;
  std::size_t iteration = 0;

  /// Frozen regions start as the weak-labeled ones.
  static MergeState init(const PointCloud& cloud, std::span<const LocalFrame> frames,
                         const DescriptorMatrix& descriptors, Partition partition, int num_classes);

  bool active(RegionId r) const { return live[r] && !excluded[r]; }
  /// Live, non-excluded region ids ascending; PredictionMatrix row order.
  std::vector<RegionId> row_regions() const;
  std::vector<PointAssignment> assignments() const;
};

struct SimilarityTerms {
  double color = 0.0;
  double scale = 0.0;
  double des = 0.0;
  double seg = 0.0;
};

/// The four bounded similarity terms. Without colors the color term repeats
/// the descriptor term.
SimilarityTerms similarity_terms(const RegionSummary& a, std::span<const double> desc_a,
                                 std::span<const double> pred_a, const RegionSummary& b,
                                 std::span<const double> desc_b, std::span<const double> pred_b,
                                 double lambda_seg);

/// y * (color + scale + des) + (1 - y) * seg with y = 1 - m / n_total
/// (y = 1 when n_total is 0).
double similarity_score(const SimilarityTerms& t, std::size_t m, std::size_t n_total);

/// Score between two regions of a state at iteration m of config.iterations.
double similarity_score(const MergeState& state, RegionId i, RegionId j, std::span<const double> pred_i,
                        std::span<const double> pred_j, std::size_t m, const SceneConfig& config);

enum class MergeDecision { None, Propagate, Fuse };

/// score >= t_merge with both confidences >= gamma propagates; with
/// score >= t_seed as well the regions fuse and the result stays frozen.
MergeDecision decide(double score, double conf_i, double conf_j, const SceneConfig& config);

struct StepStats {
  std::size_t propagated = 0;
  std::size_t fused = 0;
};

/// One merge sweep at iteration pred.iteration. Seeds (frozen regions) go in
/// ascending id; each looks at its K nearest live regions by centroid, nearest
/// first. Frozen neighbors and regions already relabeled this step are
/// skipped. The seed's confidence is its row maximum; the neighbor's is its
/// probability for the seed's class. Fused prediction rows are re-pooled by member-weighted average.
StepStats merge_step(MergeState& state, const PredictionMatrix& pred, const SceneConfig& config);

/// Excludes regions with fewer than n_ths members; their points become
/// unlabeled.
void filter_small_regions(MergeState& state, std::size_t n_ths);

class RegionPredictor {
 public:
  virtual ~RegionPredictor() = default;
  virtual PredictionMatrix predict(const MergeState& state, std::size_t m) = 0;
};

/// Softmax over classes of max(descriptor cosine * spatial Gaussian) against
/// the labeled regions of each class. A heuristic stand-in for a trained
/// network; uniform rows when nothing is labeled.
class BuiltinPredictor : public RegionPredictor {
 public:
  explicit BuiltinPredictor(double temperature = 0.1, double bandwidth = 1.0)
      : temperature_(temperature), bandwidth_(bandwidth) {}
  PredictionMatrix predict(const MergeState& state, std::size_t m) override;

 private:
  double temperature_;
  double bandwidth_;
};

/// One-hot ground-truth majority class of each region (ties: lower id).
class OraclePredictor : public RegionPredictor {
 public:
  PredictionMatrix predict(const MergeState& state, std::size_t m) override;
};

class UniformPredictor : public RegionPredictor {
 public:
  PredictionMatrix predict(const MergeState& state, std::size_t m) override;
};

/// Reads RM3DMAT1 matrices: a directory holding pred_<m>.mat per iteration,
/// or one file reused every iteration. Rows are renormalized to sum 1.
class FilePredictor : public RegionPredictor {
 public:
  explicit FilePredictor(std::filesystem::path path) : path_(std::move(path)) {}
  PredictionMatrix predict(const MergeState& state, std::size_t m) override;

 private:
  std::filesystem::path path_;
};

/// "builtin", "oracle", "uniform" or "file:<path>".
std::unique_ptr<RegionPredictor> make_predictor(const std::string& spec);

struct TraceRow {
  std::size_t iter = 0;
  double labeled_fraction = 0.0;
  std::optional<double> pseudo_precision;  // needs gt labels
  std::optional<double> pseudo_recall;
  std::size_t propagated = 0;
  std::size_t fused = 0;
};

struct SelfTrainResult {
  std::vector<PointAssignment> labels;
  std::vector<TraceRow> trace;
};

/// Accuracy-style quality of the current labels against gt: precision over
/// labeled points, recall over all points.
TraceRow label_quality(const MergeState& state);

/// Filters small regions, then for m = 1..iterations asks the predictor for a
/// matrix and runs one merge step. Throws Shape when a matrix does not match
/// the live regions.
SelfTrainResult self_train(MergeState& state, RegionPredictor& predictor, const SceneConfig& config);

void save_trace(const std::vector<TraceRow>& trace, const std::filesystem::path& path);

struct InstanceBox {
  ClassId class_id = kUnlabeled;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  std::size_t members = 0;
};

/// Same-class labeled regions with member points within `radius` of each
/// other form one instance; one tight axis-aligned box per instance.
std::vector<InstanceBox> extract_instances(const MergeState& state, const Octree& tree, double radius);

/// "class xmin ymin zmin xmax ymax zmax" rows.
void save_boxes(const std::vector<InstanceBox>& boxes, const std::filesystem::path& path);

}  // namespace pcseg
