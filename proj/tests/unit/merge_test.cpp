#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "pcseg/error.hpp"
#include "pcseg/matrix_io.hpp"
#include "pcseg/merge.hpp"
#include "pcseg/synth.hpp"

using namespace pcseg;

namespace {

struct Fixture {
  PointCloud cloud;
  Octree tree;
  std::vector<LocalFrame> frames;
  DescriptorMatrix desc;
  WeakLabelSet weak;
  SceneConfig cfg;

  explicit Fixture(std::uint64_t seed) {
    cloud = generate(preset_scene("five-primitives", seed));
    tree = Octree::build(cloud.positions);
    frames = estimate_frames(cloud, tree, cfg.radius);
    desc = compute_descriptors(cloud, frames, tree, cfg.descriptor, cfg.radius);
    weak = sample_weak_labels(cloud, 0.002, seed);
  }

  MergeState state() const {
    Partition part = grow(cloud, frames, desc, tree, select_seeds(frames, weak, cfg.seed_fraction), cfg);
    initial_pseudo_labels(part, weak);
    return MergeState::init(cloud, frames, desc, std::move(part), num_label_classes(cloud));
  }
};

// Every region's class, or -1, per iteration of a run.
class RecordingOracle : public RegionPredictor {
 public:
  PredictionMatrix predict(const MergeState& state, std::size_t m) override {
    std::vector<ClassId> snapshot;
    for (const auto& r : state.partition.regions) snapshot.push_back(state.frozen[r.id] ? r.class_id : -2);
    history.push_back(snapshot);
    return inner.predict(state, m);
  }
  OraclePredictor inner;
  std::vector<std::vector<ClassId>> history;
};

}  // namespace

TEST(Similarity, ScheduleExamples) {
  SimilarityTerms t{1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(similarity_score(t, 4, 8), 2.0);
  EXPECT_DOUBLE_EQ(similarity_score(t, 0, 8), 3.0);
  EXPECT_DOUBLE_EQ(similarity_score(t, 8, 8), 1.0);
  EXPECT_DOUBLE_EQ(similarity_score(t, 0, 0), 3.0);
}

TEST(Similarity, TermFormulas) {
  RegionSummary a;
  a.mean_color = Vec3(0, 0, 0);
  a.scale = 1.0;
  RegionSummary b;
  b.mean_color = Vec3(1, 1, 1);
  b.scale = 4.0;
  const std::vector<double> d = {1, 0};
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<double> q = {1.0, 0.0};
  const SimilarityTerms t = similarity_terms(a, d, p, b, d, q, 2.0);
  EXPECT_NEAR(t.color, 0.0, 1e-12);
  EXPECT_NEAR(t.scale, 0.25, 1e-12);
  EXPECT_NEAR(t.des, 1.0, 1e-12);
  EXPECT_NEAR(t.seg, std::exp(-2.0 * 0.5), 1e-12);

  RegionSummary nc = a;
  nc.mean_color.reset();
  nc.scale = 0.0;
  RegionSummary nc2 = nc;
  const std::vector<double> d2 = {0.6, 0.8};
  const SimilarityTerms u = similarity_terms(nc, d, p, nc2, d2, p, 1.0);
  EXPECT_NEAR(u.color, u.des, 1e-15);
  EXPECT_NEAR(u.des, 0.6, 1e-12);
  EXPECT_EQ(u.scale, 1.0);
  EXPECT_EQ(u.seg, 1.0);
}

TEST(Decide, ConditionThresholds) {
  SceneConfig cfg;
  EXPECT_EQ(decide(1.3, 0.8, 0.9, cfg), MergeDecision::Propagate);
  EXPECT_EQ(decide(1.3, 0.8, 0.7, cfg), MergeDecision::None);
  EXPECT_EQ(decide(1.6, 0.9, 0.9, cfg), MergeDecision::Fuse);
  EXPECT_EQ(decide(1.2, 0.9, 0.9, cfg), MergeDecision::None);
  EXPECT_EQ(decide(1.25, 0.75, 0.75, cfg), MergeDecision::Propagate);
  EXPECT_EQ(decide(1.6, 0.7, 0.9, cfg), MergeDecision::None);
}

TEST(Prediction, ValidationAndConfidence) {
  PredictionMatrix u = PredictionMatrix::uniform(3, 4);
  EXPECT_NO_THROW(u.validate());
  EXPECT_DOUBLE_EQ(row_confidence(u.row(0)), 0.25);
  u.row(1)[0] = 0.9;
  EXPECT_THROW(u.validate(), Error);
}

TEST(FilterSmallRegions, Boundary) {
  Fixture f(1);
  MergeState st = f.state();
  std::size_t below = 0;
  for (const auto& r : st.partition.regions) below += r.members.size() < 100;
  filter_small_regions(st, 100);
  std::size_t excluded = 0;
  for (const auto& r : st.partition.regions) {
    excluded += st.excluded[r.id];
    EXPECT_EQ(static_cast<bool>(st.excluded[r.id]), r.members.size() < 100);
  }
  EXPECT_EQ(excluded, below);
  for (const auto& a : st.assignments()) {
    if (a.region != kNoRegion && st.excluded[a.region]) {
      EXPECT_EQ(a.class_id, kUnlabeled);
    }
  }
  MergeState id = f.state();
  filter_small_regions(id, 0);
  for (auto e : id.excluded) EXPECT_EQ(e, 0);
}

TEST(SelfTrain, OracleIsSoundAndFrozenRegionsKeepClass) {
  Fixture f(2);
  MergeState st = f.state();
  const double initial_recall = *label_quality(st).pseudo_recall;
  RecordingOracle oracle;
  const auto result = self_train(st, oracle, f.cfg);
  ASSERT_EQ(result.trace.size(), 8u);
  EXPECT_GE(*result.trace.back().pseudo_recall, initial_recall);
  for (std::size_t i = 1; i < result.trace.size(); ++i) {
    EXPECT_GE(result.trace[i].labeled_fraction, result.trace[i - 1].labeled_fraction);
  }
  // Primitives are separated, so every propagated label is the true class.
  for (std::size_t i = 0; i < f.cloud.size(); ++i) {
    const auto& a = result.labels[i];
    if (a.class_id != kUnlabeled) {
      EXPECT_EQ(a.class_id, (*f.cloud.gt_labels)[i]) << i;
    }
  }
  for (std::size_t it = 1; it < oracle.history.size(); ++it) {
    for (std::size_t r = 0; r < oracle.history[it].size(); ++r) {
      if (oracle.history[it - 1][r] >= 0 && st.live[r]) {
        EXPECT_EQ(oracle.history[it][r], oracle.history[it - 1][r]);
      }
    }
  }
}

TEST(SelfTrain, UniformAndZeroIterationsChangeNothing) {
  Fixture f(3);
  MergeState a = f.state();
  const auto before = a.assignments();
  UniformPredictor uniform;
  EXPECT_EQ(self_train(a, uniform, f.cfg).labels, before);

  MergeState b = f.state();
  SceneConfig none = f.cfg;
  none.iterations = 0;
  OraclePredictor oracle;
  const auto r = self_train(b, oracle, none);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.labels, before);
}

TEST(SelfTrain, IdempotentWithoutEligiblePairs) {
  Fixture f(4);
  MergeState st = f.state();
  const auto rows = st.row_regions();
  PredictionMatrix pred = PredictionMatrix::uniform(rows.size(), static_cast<std::size_t>(st.num_classes));
  pred.iteration = 1;
  const auto before = st.assignments();
  const StepStats s1 = merge_step(st, pred, f.cfg);
  const StepStats s2 = merge_step(st, pred, f.cfg);
  EXPECT_EQ(s1.propagated + s1.fused + s2.propagated + s2.fused, 0u);
  EXPECT_EQ(st.assignments(), before);
}

TEST(SelfTrain, WrongRowCountIsShapeError) {
  Fixture f(1);
  MergeState st = f.state();
  const auto path = std::filesystem::temp_directory_path() / "pcseg_bad_pred.mat";
  write_matrix(FloatMatrix{3, static_cast<std::size_t>(st.num_classes),
                           std::vector<float>(3 * static_cast<std::size_t>(st.num_classes), 0.2f)},
               path);
  FilePredictor file(path);
  try {
    self_train(st, file, f.cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
  std::filesystem::remove(path);
}

TEST(BuiltinPredictor, RowsAreDistributions) {
  Fixture f(5);
  MergeState st = f.state();
  BuiltinPredictor builtin;
  const PredictionMatrix p = builtin.predict(st, 1);
  EXPECT_EQ(p.rows, st.row_regions().size());
  EXPECT_NO_THROW(p.validate());
  // A labeled region's own class has the top probability.
  const auto rows = st.row_regions();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = st.partition.regions[rows[k]];
    if (r.state != LabelState::Weak) continue;
    const auto row = p.row(k);
    EXPECT_DOUBLE_EQ(row[static_cast<std::size_t>(r.class_id)], row_confidence(row));
  }
}

TEST(BuiltinPredictor, NothingLabeledGivesUniformRows) {
  Fixture f(5);
  Partition part = grow(f.cloud, f.frames, f.desc, f.tree, select_seeds(f.frames, {}, f.cfg.seed_fraction), f.cfg);
  MergeState st = MergeState::init(f.cloud, f.frames, f.desc, std::move(part), 5);
  BuiltinPredictor builtin;
  const PredictionMatrix p = builtin.predict(st, 1);
  for (double v : p.data) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(Instances, BoxesPerConnectedGroup) {
  PointCloud c;
  for (int i = 0; i < 8; ++i) c.positions.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  for (int i = 0; i < 8; ++i) c.positions.emplace_back(5 + (i & 1), (i >> 1) & 1, (i >> 2) & 1);
  const Octree tree = Octree::build(c.positions);
  std::vector<LocalFrame> frames(16);
  DescriptorMatrix d;
  d.kind = DescriptorKind::External;
  d.rows = 16;
  d.cols = 1;
  d.data.assign(16, 1.0);
  d.isolated.assign(16, 0);
  Partition part;
  part.point_region.assign(16, 0);
  for (int r = 0; r < 4; ++r) {
    Region reg;
    reg.id = r;
    for (PointIndex p = static_cast<PointIndex>(4 * r); p < static_cast<PointIndex>(4 * r + 4); ++p) {
      reg.add_point(c, frames, d, p);
      part.point_region[p] = r;
    }
    part.regions.push_back(std::move(reg));
  }
  WeakLabelSet weak;
  weak.num_classes = 1;
  weak.class_frequency = {16};
  MergeState empty = MergeState::init(c, frames, d, part, 1);
  EXPECT_TRUE(extract_instances(empty, tree, 1.0).empty());

  weak.entries = {{0, 0}, {4, 0}, {8, 0}, {12, 0}};
  initial_pseudo_labels(part, weak);
  MergeState st = MergeState::init(c, frames, d, part, 1);
  const auto boxes = extract_instances(st, tree, 1.0);
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[0].min, Vec3(0, 0, 0));
  EXPECT_EQ(boxes[0].max, Vec3(1, 1, 1));
  EXPECT_EQ(boxes[0].members, 8u);
  EXPECT_EQ(boxes[1].min, Vec3(5, 0, 0));
}
