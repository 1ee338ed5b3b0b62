#include <algorithm>
#include <cmath>
#include <string>

#include "pcseg/error.hpp"
#include "pcseg/matrix_io.hpp"
#include "pcseg/merge.hpp"

namespace pcseg {

namespace {

std::size_t class_count(const MergeState& state) {
  return static_cast<std::size_t>(std::max(state.num_classes, 0));
}

}  // namespace

PredictionMatrix BuiltinPredictor::predict(const MergeState& state, std::size_t m) {
  const auto rows = state.row_regions();
  const std::size_t c = class_count(state);
  PredictionMatrix out = PredictionMatrix::uniform(rows.size(), c);
  out.iteration = m;

  struct Labeled {
    ClassId cls;
    Vec3 centroid;
    std::vector<double> desc;
  };
  const auto& regions = state.partition.regions;
  const DescriptorKind kind = state.descriptors ? state.descriptors->kind : DescriptorKind::AdaptedPfh;
  std::vector<Labeled> labeled;
  for (RegionId r : rows) {
    const ClassId cls = regions[r].class_id;
    if (cls == kUnlabeled || static_cast<std::size_t>(cls) >= c) continue;
    labeled.push_back({cls, regions[r].summary().centroid, regions[r].descriptor(kind).values});
  }
  if (labeled.empty() || c == 0) return out;

  const double inv_two_bw2 = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  std::vector<double> best(c);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Region& region = regions[rows[k]];
    const Vec3 centroid = region.summary().centroid;
    const auto desc = region.descriptor(kind).values;
    std::fill(best.begin(), best.end(), 0.0);
    for (const auto& l : labeled) {
      const double sim = std::max(0.0, cosine(desc, l.desc)) *
                         std::exp(-(centroid - l.centroid).squaredNorm() * inv_two_bw2);
      auto& b = best[static_cast<std::size_t>(l.cls)];
      b = std::max(b, sim);
    }
    const double top = *std::max_element(best.begin(), best.end());
    double sum = 0.0;
    auto row = out.row(k);
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = std::exp((best[j] - top) / temperature_);
      sum += row[j];
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

PredictionMatrix OraclePredictor::predict(const MergeState& state, std::size_t m) {
  if (!state.cloud || !state.cloud->gt_labels) {
    throw Error(ErrorKind::MissingChannel, "oracle predictor needs ground-truth labels");
  }
  const auto& gt = *state.cloud->gt_labels;
  const auto rows = state.row_regions();
  const std::size_t c = class_count(state);
  PredictionMatrix out;
  out.rows = rows.size();
  out.cols = c;
  out.iteration = m;
  out.data.assign(rows.size() * c, 0.0);
  std::vector<std::size_t> votes(c);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::fill(votes.begin(), votes.end(), 0);
    for (PointIndex p : state.partition.regions[rows[k]].members) {
      if (gt[p] >= 0 && static_cast<std::size_t>(gt[p]) < c) ++votes[static_cast<std::size_t>(gt[p])];
    }
    const auto it = std::max_element(votes.begin(), votes.end());
    if (it == votes.end() || *it == 0) {
      for (double& v : out.row(k)) v = 1.0 / static_cast<double>(c);
    } else {
      out.row(k)[static_cast<std::size_t>(it - votes.begin())] = 1.0;
    }
  }
  return out;
}

PredictionMatrix UniformPredictor::predict(const MergeState& state, std::size_t m) {
  PredictionMatrix out = PredictionMatrix::uniform(state.row_regions().size(), class_count(state));
  out.iteration = m;
  return out;
}

PredictionMatrix FilePredictor::predict(const MergeState& state, std::size_t m) {
  std::filesystem::path file = path_;
  if (std::filesystem::is_directory(path_)) file = path_ / ("pred_" + std::to_string(m) + ".mat");
  const FloatMatrix raw = read_matrix(file);
  const std::size_t live = state.row_regions().size();
  if (raw.rows != live) {
    throw Error(ErrorKind::Shape, "'" + file.string() + "' has " + std::to_string(raw.rows) + " rows for " +
                                      std::to_string(live) + " live regions");
  }
  if (raw.cols != class_count(state)) {
    throw Error(ErrorKind::Shape, "'" + file.string() + "' has " + std::to_string(raw.cols) + " columns for " +
                                      std::to_string(class_count(state)) + " classes");
  }
  PredictionMatrix out;
  out.rows = raw.rows;
  out.cols = raw.cols;
  out.iteration = m;
  out.data.assign(raw.data.begin(), raw.data.end());
  for (std::size_t k = 0; k < out.rows; ++k) {
    auto row = out.row(k);
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) throw Error(ErrorKind::Data, "'" + file.string() + "' holds a negative probability");
      sum += v;
    }
    if (sum <= 0.0) throw Error(ErrorKind::Data, "'" + file.string() + "' holds an all-zero row");
    for (double& v : row) v /= sum;
  }
  return out;
}

std::unique_ptr<RegionPredictor> make_predictor(const std::string& spec) {
  if (spec == "builtin") return std::make_unique<BuiltinPredictor>();
  if (spec == "oracle") return std::make_unique<OraclePredictor>();
  if (spec == "uniform") return std::make_unique<UniformPredictor>();
  if (spec.rfind("file:", 0) == 0 && spec.size() > 5) return std::make_unique<FilePredictor>(spec.substr(5));
  throw Error(ErrorKind::Usage, "unknown predictor '" + spec + "' (builtin, oracle, uniform, file:<path>)");
}

}  // namespace pcseg
