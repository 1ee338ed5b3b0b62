#include "pcseg/local_geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "pcseg/error.hpp"
#include "pcseg/parallel.hpp"

namespace pcseg {

namespace {

constexpr double kCancelled = 1e-9;

Vec3 orient(const Vec3& n, const OrientationBasis& basis) {
  for (const Vec3* axis : {&basis.primary, &basis.secondary}) {
    const double s = n.dot(*axis);
    if (std::abs(s) >= OrientationBasis::kDeadZone) return s < 0.0 ? Vec3(-n) : n;
  }
  return n.dot(basis.tertiary) < 0.0 ? Vec3(-n) : n;
}

}  // namespace

OrientationBasis OrientationBasis::rotated(const Mat3& r) {
  return {r * Vec3::UnitZ(), r * Vec3::UnitX(), r * Vec3::UnitY()};
}

LocalFrame frame_from_points(std::span<const Vec3> points, const OrientationBasis& basis) {
  LocalFrame frame;
  frame.neighbor_count = static_cast<std::uint32_t>(points.size());
  if (points.size() < 3) return frame;

  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  if (solver.info() != Eigen::Success) return frame;
  Vec3 lambda = solver.eigenvalues().cwiseMax(0.0);
  const double total = lambda.sum();
  if (!(total > 0.0)) return frame;

  frame.normal = orient(solver.eigenvectors().col(0).normalized(), basis);
  frame.curvature = std::clamp(lambda[0] / total, 0.0, 1.0 / 3.0);
  frame.degenerate = false;
  return frame;
}

std::vector<LocalFrame> estimate_frames(const PointCloud& cloud, const Octree& tree, double radius,
                                        const OrientationBasis& basis) {
  if (!(radius > 0.0)) throw Error(ErrorKind::Bounds, "frame radius must be positive");
  if (tree.size() != cloud.size()) throw Error(ErrorKind::Shape, "octree was not built over this cloud");
  std::vector<LocalFrame> frames(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    const auto neighbors = tree.radius_query(cloud.positions[i], radius);
    std::vector<Vec3> pts;
    pts.reserve(neighbors.size());
    for (auto j : neighbors) pts.push_back(cloud.positions[j]);
    frames[i] = frame_from_points(pts, basis);
  });
  return frames;
}

void attach_frames(PointCloud& cloud, const std::vector<LocalFrame>& frames) {
  if (frames.size() != cloud.size()) throw Error(ErrorKind::Shape, "frame count differs from cloud size");
  auto& normals = cloud.normals.emplace();
  auto& curv = cloud.curvatures.emplace();
  normals.reserve(frames.size());
  curv.reserve(frames.size());
  for (const auto& f : frames) {
    normals.push_back(f.normal);
    curv.push_back(f.curvature);
  }
}

void RegionAccumulator::add(const PointCloud& cloud, std::span<const LocalFrame> frames, PointIndex i) {
  const Vec3& p = cloud.positions[i];
  const LocalFrame& f = frames[i];
  ++count_;
  position_sum_ += p;
  lo_ = lo_.cwiseMin(p);
  hi_ = hi_.cwiseMax(p);
  curvature_sum_all_ += f.curvature;
  if (!f.degenerate) {
    ++frame_count_;
    normal_sum_ += f.normal;
    curvature_sum_ += f.curvature;
  }
  if (cloud.colors) {
    has_color_ = true;
    color_sum_ += (*cloud.colors)[i];
  }
}

void RegionAccumulator::merge(const RegionAccumulator& other) {
  count_ += other.count_;
  frame_count_ += other.frame_count_;
  normal_sum_ += other.normal_sum_;
  curvature_sum_ += other.curvature_sum_;
  curvature_sum_all_ += other.curvature_sum_all_;
  position_sum_ += other.position_sum_;
  color_sum_ += other.color_sum_;
  has_color_ = has_color_ || other.has_color_;
  lo_ = lo_.cwiseMin(other.lo_);
  hi_ = hi_.cwiseMax(other.hi_);
}

RegionSummary RegionAccumulator::summary() const {
  RegionSummary s;
  s.size = count_;
  if (count_ == 0) {
    s.degenerate = true;
    return s;
  }
  const double n = static_cast<double>(count_);
  s.centroid = position_sum_ / n;
  s.scale = (hi_ - lo_).norm();
  if (has_color_) s.mean_color = color_sum_ / n;
  if (frame_count_ == 0) {
    s.degenerate = true;
    s.curvature = curvature_sum_all_ / n;
    return s;
  }
  s.curvature = curvature_sum_ / static_cast<double>(frame_count_);
  const Vec3 mean_normal = normal_sum_ / static_cast<double>(frame_count_);
  if (mean_normal.norm() < kCancelled) {
    s.degenerate = true;
  } else {
    s.normal = mean_normal.normalized();
  }
  return s;
}

RegionSummary region_aggregate(const PointCloud& cloud, std::span<const LocalFrame> frames,
                               std::span<const PointIndex> members) {
  if (members.empty()) throw Error(ErrorKind::Bounds, "region has no members");
  RegionAccumulator acc;
  for (auto i : members) acc.add(cloud, frames, i);
  return acc.summary();
}

}  // namespace pcseg
