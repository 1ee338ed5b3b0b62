#include "pcseg/weak_labels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "pcseg/error.hpp"
#include "pcseg/random.hpp"

namespace pcseg {

namespace {

std::vector<std::size_t> class_counts(const std::vector<ClassId>& labels, int num_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (ClassId c : labels) {
    if (c >= 0) ++counts[static_cast<std::size_t>(c)];
  }
  return counts;
}

}  // namespace

WeakLabelSet sample_weak_labels(const PointCloud& cloud, double fraction, std::uint64_t rng_seed) {
  if (!cloud.gt_labels) throw Error(ErrorKind::MissingChannel, "weak-label sampling needs gt_labels");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::Bounds, "sample fraction must lie in (0, 1]");
  }
  const auto& labels = *cloud.gt_labels;
  const std::size_t n = labels.size();

  WeakLabelSet weak;
  weak.num_classes = num_label_classes(cloud);
  weak.class_frequency = class_counts(labels, weak.num_classes);

  std::vector<std::vector<PointIndex>> by_class(static_cast<std::size_t>(weak.num_classes));
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= 0) by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<PointIndex>(i));
  }
  std::size_t present = 0;
  for (const auto& members : by_class) present += members.empty() ? 0 : 1;

  const auto rounded = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
  std::size_t labeled_points = 0;
  for (const auto& members : by_class) labeled_points += members.size();
  const std::size_t target = std::min(std::max(rounded, present), labeled_points);

  Rng rng(rng_seed);
  std::vector<bool> taken(n, false);
  for (const auto& members : by_class) {
    if (members.empty()) continue;
    const PointIndex pick = members[uniform_index(rng, members.size())];
    taken[pick] = true;
    weak.entries.push_back({pick, labels[pick]});
  }

  std::vector<PointIndex> rest;
  rest.reserve(labeled_points);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= 0 && !taken[i]) rest.push_back(static_cast<PointIndex>(i));
  }
  const std::size_t extra = target - weak.entries.size();
  for (auto slot : sample_without_replacement(rng, static_cast<std::uint32_t>(rest.size()),
                                              static_cast<std::uint32_t>(extra))) {
    const PointIndex p = rest[slot];
    weak.entries.push_back({p, labels[p]});
  }
  return weak;
}

void save_weak_labels(const WeakLabelSet& weak, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  for (const auto& e : weak.entries) out << e.point << ' ' << e.class_id << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

WeakLabelSet load_weak_labels(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  WeakLabelSet weak;
  std::set<PointIndex> seen;
  std::string line;
  std::size_t line_no = 0;
  ClassId top = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream row(line);
    long long idx = 0;
    long long cls = 0;
    if (!(row >> idx)) continue;
    std::string trailing;
    if (!(row >> cls) || (row >> trailing)) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 'index class'", line_no);
    }
    if (idx < 0 || static_cast<std::size_t>(idx) >= cloud.size() || cls < 0) {
      throw Error(ErrorKind::Data, "line " + std::to_string(line_no) + ": index or class out of range", line_no);
    }
    if (!seen.insert(static_cast<PointIndex>(idx)).second) {
      throw Error(ErrorKind::Data, "line " + std::to_string(line_no) + ": duplicate point index", line_no);
    }
    weak.entries.push_back({static_cast<PointIndex>(idx), static_cast<ClassId>(cls)});
    top = std::max<ClassId>(top, static_cast<ClassId>(cls));
  }
  weak.num_classes = std::max(num_label_classes(cloud), top + 1);
  if (cloud.gt_labels) {
    weak.class_frequency = class_counts(*cloud.gt_labels, weak.num_classes);
  } else {
    weak.class_frequency.assign(static_cast<std::size_t>(weak.num_classes), 0);
    for (const auto& e : weak.entries) ++weak.class_frequency[static_cast<std::size_t>(e.class_id)];
  }
  return weak;
}

}  // namespace pcseg
