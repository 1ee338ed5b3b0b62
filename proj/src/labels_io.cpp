#include "pcseg/labels_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "pcseg/error.hpp"

namespace pcseg {

void save_labels(const std::vector<PointAssignment>& assignments, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (f == nullptr) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  bool ok = true;
  for (std::size_t i = 0; i < assignments.size() && ok; ++i) {
    const auto& a = assignments[i];
    ok = std::fprintf(f, "%zu %d %d %.6g\n", i, a.region, a.class_id, a.confidence) > 0;
  }
  ok = (std::fclose(f) == 0) && ok;
  if (!ok) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::vector<PointAssignment> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<PointAssignment> out;
  std::vector<bool> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    long long idx = 0;
    if (!(row >> idx)) continue;
    PointAssignment a;
    std::string trailing;
    if (!(row >> a.region >> a.class_id >> a.confidence) || (row >> trailing) || idx < 0) {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": expected 'index region class confidence'", line_no);
    }
    const auto i = static_cast<std::size_t>(idx);
    if (i >= out.size()) {
      out.resize(i + 1);
      seen.resize(i + 1, false);
    }
    if (seen[i]) throw Error(ErrorKind::Data, "line " + std::to_string(line_no) + ": duplicate index", line_no);
    seen[i] = true;
    out[i] = a;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw Error(ErrorKind::Data, "label file misses index " + std::to_string(i));
  }
  return out;
}

}  // namespace pcseg
