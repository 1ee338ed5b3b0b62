#include "pcseg/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcseg/error.hpp"

namespace pcseg {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::MissingChannel: return "missing channel";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::EmptyIndex: return "empty index";
    case ErrorKind::DegeneratePair: return "degenerate pair";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

namespace {

template <class T>
void select_channel(std::optional<std::vector<T>>& out, const std::optional<std::vector<T>>& in,
                    const std::vector<PointIndex>& indices) {
  if (!in) return;
  std::vector<T> values;
  values.reserve(indices.size());
  for (auto i : indices) values.push_back((*in)[i]);
  out = std::move(values);
}

template <class T>
void check_length(const std::optional<std::vector<T>>& channel, std::size_t n, const char* name) {
  if (channel && channel->size() != n) {
    throw Error(ErrorKind::Data, std::string("channel '") + name + "' has " +
                                     std::to_string(channel->size()) + " entries, expected " +
                                     std::to_string(n));
  }
}

}  // namespace

PointCloud PointCloud::select(const std::vector<PointIndex>& indices) const {
  PointCloud out;
  out.positions.reserve(indices.size());
  for (auto i : indices) out.positions.push_back(positions[i]);
  select_channel(out.colors, colors, indices);
  select_channel(out.normals, normals, indices);
  select_channel(out.curvatures, curvatures, indices);
  select_channel(out.gt_labels, gt_labels, indices);
  select_channel(out.gt_instances, gt_instances, indices);
  return out;
}

void validate(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  check_length(cloud.colors, n, "colors");
  check_length(cloud.normals, n, "normals");
  check_length(cloud.curvatures, n, "curvatures");
  check_length(cloud.gt_labels, n, "gt_labels");
  check_length(cloud.gt_instances, n, "gt_instances");
  for (std::size_t i = 0; i < n; ++i) {
    if (!cloud.positions[i].allFinite()) {
      throw Error(ErrorKind::Data, "non-finite coordinate at point " + std::to_string(i));
    }
  }
  if (cloud.normals) {
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs((*cloud.normals)[i].norm() - 1.0) > 1e-6) {
        throw Error(ErrorKind::Data, "normal at point " + std::to_string(i) + " is not unit length");
      }
    }
  }
  if (cloud.colors) {
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& c = (*cloud.colors)[i];
      if (!(c.minCoeff() >= 0.0 && c.maxCoeff() <= 1.0)) {
        throw Error(ErrorKind::Data, "color at point " + std::to_string(i) + " outside [0,1]");
      }
    }
  }
  if (cloud.curvatures) {
    for (std::size_t i = 0; i < n; ++i) {
      const double c = (*cloud.curvatures)[i];
      if (!(c >= 0.0 && c <= 1.0)) {
        throw Error(ErrorKind::Data, "curvature at point " + std::to_string(i) + " outside [0,1]");
      }
    }
  }
}

int num_label_classes(const PointCloud& cloud) {
  if (!cloud.gt_labels || cloud.gt_labels->empty()) return 0;
  const ClassId top = *std::max_element(cloud.gt_labels->begin(), cloud.gt_labels->end());
  return top < 0 ? 0 : top + 1;
}

}  // namespace pcseg
