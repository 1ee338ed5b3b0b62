#include "pcseg/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pcseg/config.hpp"
#include "pcseg/error.hpp"
#include "pcseg/random.hpp"

namespace pcseg {

Transform Transform::rotate_z(double degrees) {
  if (!(degrees >= 0.0 && degrees <= 180.0)) throw Error(ErrorKind::Bounds, "rotation angle must lie in [0, 180]");
  Transform t;
  t.kind = Kind::RotateZ;
  t.angle_deg = degrees;
  return t;
}

Transform Transform::flip(int axis) {
  if (axis < 0 || axis > 2) throw Error(ErrorKind::Bounds, "flip axis must be x, y or z");
  Transform t;
  t.kind = Kind::Flip;
  t.axis = axis;
  return t;
}

Transform Transform::downsample(double keep, std::uint64_t seed) {
  if (!(keep > 0.0 && keep <= 1.0)) throw Error(ErrorKind::Bounds, "keep fraction must lie in (0, 1]");
  Transform t;
  t.kind = Kind::Downsample;
  t.keep = keep;
  t.seed = seed;
  return t;
}

Transform parse_transform(std::string_view spec) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto colon = spec.find(':', pos);
    parts.push_back(spec.substr(pos, colon == std::string_view::npos ? std::string_view::npos : colon - pos));
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  auto bad = [&]() {
    return Error(ErrorKind::Usage, "bad transform '" + std::string(spec) + "' (rotz:<deg>, flip:<x|y|z>, down:<keep>:<seed>)");
  };
  try {
    if (parts[0] == "rotz" && parts.size() == 2) return Transform::rotate_z(parse_number("rotz", parts[1]));
    if (parts[0] == "flip" && parts.size() == 2 && parts[1].size() == 1) {
      const char a = parts[1][0];
      if (a >= 'x' && a <= 'z') return Transform::flip(a - 'x');
    }
    if (parts[0] == "down" && parts.size() == 3) {
      const auto seed = parse_integer("down", parts[2]);
      if (seed < 0) throw bad();
      return Transform::downsample(parse_number("down", parts[1]), static_cast<std::uint64_t>(seed));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Usage) throw;
    throw Error(ErrorKind::Usage, std::string(e.what()));
  }
  throw bad();
}

std::string to_string(const Transform& t) {
  switch (t.kind) {
    case Transform::Kind::RotateZ: return "rotz:" + format_number(t.angle_deg);
    case Transform::Kind::Flip: return std::string("flip:") + static_cast<char>('x' + t.axis);
    case Transform::Kind::Downsample: return "down:" + format_number(t.keep) + ":" + std::to_string(t.seed);
  }
  return {};
}

PointCloud rotate(const PointCloud& cloud, const Mat3& r) {
  PointCloud out = cloud;
  for (auto& p : out.positions) p = r * p;
  if (out.normals) {
    for (auto& n : *out.normals) n = r * n;
  }
  return out;
}

Transformed apply(const PointCloud& cloud, const Transform& t) {
  Transformed out;
  const std::size_t n = cloud.size();
  if (t.kind == Transform::Kind::Downsample) {
    const auto keep = std::min<std::size_t>(n, static_cast<std::size_t>(std::floor(t.keep * static_cast<double>(n) + 0.5)));
    Rng rng(t.seed);
    out.source = sample_without_replacement(rng, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(keep));
    std::sort(out.source.begin(), out.source.end());
    out.cloud = cloud.select(out.source);
    return out;
  }
  out.source.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.source[i] = static_cast<PointIndex>(i);
  if (t.kind == Transform::Kind::Flip) {
    out.cloud = cloud;
    for (auto& p : out.cloud.positions) p[t.axis] = -p[t.axis];
    if (out.cloud.normals) {
      for (auto& v : *out.cloud.normals) v[t.axis] = -v[t.axis];
    }
    return out;
  }
  const double a = t.angle_deg * std::numbers::pi / 180.0;
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
  if (t.angle_deg == 0.0) r = Mat3::Identity();
  out.cloud = rotate(cloud, r);
  return out;
}

Mat3 random_rotation(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

double consistency_loss(const ProbRows& original, const ProbRows& transformed,
                        const std::vector<PointIndex>& source, std::size_t sample_count, std::uint64_t seed) {
  if (source.size() != transformed.rows) throw Error(ErrorKind::Shape, "index map does not match transformed rows");
  if (original.cols != transformed.cols) throw Error(ErrorKind::Shape, "class counts differ");
  ProbRows gathered;
  gathered.rows = source.size();
  gathered.cols = original.cols;
  gathered.data.reserve(source.size() * original.cols);
  for (PointIndex s : source) {
    if (s >= original.rows) throw Error(ErrorKind::Bounds, "index map points outside the original rows");
    const auto r = original.row(s);
    gathered.data.insert(gathered.data.end(), r.begin(), r.end());
  }
  return augmentation_loss(gathered, transformed, sample_count, seed);
}

}  // namespace pcseg
