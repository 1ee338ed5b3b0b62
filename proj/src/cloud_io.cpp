#include "pcseg/cloud_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pcseg/error.hpp"

namespace pcseg {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

ClassId label_from_double(double v, std::size_t line) {
  if (!std::isfinite(v) || v != std::floor(v) || v < -1.0) {
    throw Error(ErrorKind::Data, "line " + std::to_string(line) + ": label must be an integer >= -1",
                line);
  }
  return static_cast<ClassId>(v);
}

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::F32;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

PlyType parse_ply_type(std::string_view name, std::size_t line) {
  if (name == "char" || name == "int8") return PlyType::I8;
  if (name == "uchar" || name == "uint8") return PlyType::U8;
  if (name == "short" || name == "int16") return PlyType::I16;
  if (name == "ushort" || name == "uint16") return PlyType::U16;
  if (name == "int" || name == "int32") return PlyType::I32;
  if (name == "uint" || name == "uint32") return PlyType::U32;
  if (name == "float" || name == "float32") return PlyType::F32;
  if (name == "double" || name == "float64") return PlyType::F64;
  throw Error(ErrorKind::Parse,
              "line " + std::to_string(line) + ": unknown PLY type '" + std::string(name) + "'",
              line);
}

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::I8:
    case PlyType::U8: return 1;
    case PlyType::I16:
    case PlyType::U16: return 2;
    case PlyType::I32:
    case PlyType::U32:
    case PlyType::F32: return 4;
    case PlyType::F64: return 8;
  }
  return 0;
}

bool is_integer_type(PlyType t) { return t != PlyType::F32 && t != PlyType::F64; }

template <class T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

double decode_binary(PlyType t, const char* p) {
  switch (t) {
    case PlyType::I8: return load_le<std::int8_t>(p);
    case PlyType::U8: return load_le<std::uint8_t>(p);
    case PlyType::I16: return load_le<std::int16_t>(p);
    case PlyType::U16: return load_le<std::uint16_t>(p);
    case PlyType::I32: return load_le<std::int32_t>(p);
    case PlyType::U32: return load_le<std::uint32_t>(p);
    case PlyType::F32: return load_le<float>(p);
    case PlyType::F64: return load_le<double>(p);
  }
  return 0.0;
}

struct VertexSlots {
  int x = -1, y = -1, z = -1, red = -1, green = -1, blue = -1, label = -1, instance = -1;
};

class VertexSink {
 public:
  VertexSink(const PlyElement& vertex, std::size_t header_lines) {
    for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
      const auto& p = vertex.properties[i];
      const int idx = static_cast<int>(i);
      if (p.is_list) continue;
      if (p.name == "x") slots_.x = idx;
      else if (p.name == "y") slots_.y = idx;
      else if (p.name == "z") slots_.z = idx;
      else if (p.name == "red") slots_.red = idx;
      else if (p.name == "green") slots_.green = idx;
      else if (p.name == "blue") slots_.blue = idx;
      else if (p.name == "label") slots_.label = idx;
      else if (p.name == "instance") slots_.instance = idx;
    }
    if (slots_.x < 0 || slots_.y < 0 || slots_.z < 0) {
      throw Error(ErrorKind::Parse, "PLY vertex element lacks x/y/z properties", header_lines);
    }
    has_color_ = slots_.red >= 0 && slots_.green >= 0 && slots_.blue >= 0;
    if (has_color_) {
      color_scale_ = is_integer_type(vertex.properties[slots_.red].type) ? 1.0 / 255.0 : 1.0;
    }
    cloud_.positions.reserve(vertex.count);
    if (has_color_) cloud_.colors.emplace().reserve(vertex.count);
    if (slots_.label >= 0) cloud_.gt_labels.emplace().reserve(vertex.count);
    if (slots_.instance >= 0) cloud_.gt_instances.emplace().reserve(vertex.count);
  }

  void add(const std::vector<double>& values, std::size_t line) {
    const Vec3 p(values[slots_.x], values[slots_.y], values[slots_.z]);
    if (!p.allFinite()) {
      throw Error(ErrorKind::Data, "line " + std::to_string(line) + ": non-finite coordinate",
                  line);
    }
    cloud_.positions.push_back(p);
    if (has_color_) {
      cloud_.colors->push_back(Vec3(values[slots_.red], values[slots_.green], values[slots_.blue]) *
                               color_scale_);
    }
    if (slots_.label >= 0) cloud_.gt_labels->push_back(label_from_double(values[slots_.label], line));
    if (slots_.instance >= 0) {
      cloud_.gt_instances->push_back(label_from_double(values[slots_.instance], line));
    }
  }

  PointCloud take() { return std::move(cloud_); }

 private:
  VertexSlots slots_;
  bool has_color_ = false;
  double color_scale_ = 1.0;
  PointCloud cloud_;
};

PointCloud parse_ply(const std::string& data) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& out) {
    if (pos >= data.size()) return false;
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    out = std::string_view(data).substr(pos, end - pos);
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line) || line != "ply") throw Error(ErrorKind::Parse, "line 1: missing 'ply' magic", 1);

  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  bool ended = false;
  while (next_line(line)) {
    auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad format line", line_no);
      if (tok[1] == "ascii") binary = false;
      else if (tok[1] == "binary_little_endian") binary = true;
      else {
        throw Error(ErrorKind::Parse,
                    "line " + std::to_string(line_no) + ": unsupported PLY format '" +
                        std::string(tok[1]) + "'",
                    line_no);
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad element line", line_no);
      PlyElement e;
      e.name = std::string(tok[1]);
      double count = 0;
      if (!parse_double(tok[2], count) || count < 0) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad element count", line_no);
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": property before element", line_no);
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        p.is_list = true;
        p.count_type = parse_ply_type(tok[2], line_no);
        p.type = parse_ply_type(tok[3], line_no);
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        p.type = parse_ply_type(tok[1], line_no);
        p.name = std::string(tok[2]);
      } else {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad property line", line_no);
      }
      elements.back().properties.push_back(std::move(p));
    } else {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": unexpected header keyword '" +
                      std::string(tok[0]) + "'",
                  line_no);
    }
  }
  if (!ended) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": missing end_header", line_no);
  if (!have_format) throw Error(ErrorKind::Parse, "PLY header lacks a format line", line_no);

  const PlyElement* vertex = nullptr;
  for (const auto& e : elements) {
    if (e.name == "vertex") vertex = &e;
  }
  if (vertex == nullptr) throw Error(ErrorKind::Parse, "PLY header has no vertex element", line_no);
  VertexSink sink(*vertex, line_no);

  std::vector<double> values;
  for (const auto& element : elements) {
    const bool keep = &element == vertex;
    for (std::size_t row = 0; row < element.count; ++row) {
      values.clear();
      std::size_t where = line_no + 1;
      if (binary) {
        for (const auto& prop : element.properties) {
          if (prop.is_list) {
            const std::size_t cs = ply_type_size(prop.count_type);
            if (pos + cs > data.size()) throw Error(ErrorKind::Parse, "truncated PLY body in element '" + element.name + "'");
            const auto n = static_cast<std::size_t>(decode_binary(prop.count_type, data.data() + pos));
            pos += cs + n * ply_type_size(prop.type);
            if (pos > data.size()) throw Error(ErrorKind::Parse, "truncated PLY body in element '" + element.name + "'");
            values.push_back(0.0);
          } else {
            const std::size_t s = ply_type_size(prop.type);
            if (pos + s > data.size()) {
              throw Error(ErrorKind::Parse, "truncated PLY body at " + element.name + " row " + std::to_string(row));
            }
            values.push_back(decode_binary(prop.type, data.data() + pos));
            pos += s;
          }
        }
        where = row + 1;
      } else {
        if (!next_line(line)) {
          throw Error(ErrorKind::Parse, "line " + std::to_string(line_no + 1) + ": unexpected end of PLY body", line_no + 1);
        }
        where = line_no;
        auto tok = split_ws(line);
        std::size_t t = 0;
        for (const auto& prop : element.properties) {
          double v = 0;
          if (t >= tok.size() || !parse_double(tok[t], v)) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": malformed PLY row", line_no);
          }
          ++t;
          if (prop.is_list) {
            t += static_cast<std::size_t>(v);
            values.push_back(0.0);
          } else {
            values.push_back(v);
          }
        }
      }
      if (keep) sink.add(values, where);
    }
  }
  PointCloud cloud = sink.take();
  validate(cloud);
  return cloud;
}

void append_le(std::string& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const char*>(p);
  if constexpr (std::endian::native == std::endian::little) {
    out.append(b, n);
  } else {
    for (std::size_t i = n; i-- > 0;) out.push_back(b[i]);
  }
}

std::uint8_t color_byte(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

std::string color_text(double c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", c * 255.0);
  return buf;
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".ply" ? CloudFormat::PlyBinary : CloudFormat::AsciiXyz;
}

PointCloud parse_ascii_cloud(std::string_view text) {
  PointCloud cloud;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (columns == 0) {
      columns = tok.size();
      if (columns != 3 && columns != 4 && columns != 6 && columns != 7) {
        throw Error(ErrorKind::Parse,
                    "line " + std::to_string(line_no) + ": expected 3, 4, 6 or 7 columns, got " +
                        std::to_string(columns),
                    line_no);
      }
      if (columns >= 6) cloud.colors.emplace();
      if (columns == 4 || columns == 7) cloud.gt_labels.emplace();
    } else if (tok.size() != columns) {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                      " columns, got " + std::to_string(tok.size()),
                  line_no);
    }
    std::array<double, 7> v{};
    for (std::size_t i = 0; i < columns; ++i) {
      if (!parse_double(tok[i], v[i])) {
        throw Error(ErrorKind::Parse,
                    "line " + std::to_string(line_no) + ": cannot parse '" + std::string(tok[i]) + "'",
                    line_no);
      }
    }
    const Vec3 p(v[0], v[1], v[2]);
    if (!p.allFinite()) {
      throw Error(ErrorKind::Data, "line " + std::to_string(line_no) + ": non-finite coordinate",
                  line_no);
    }
    cloud.positions.push_back(p);
    if (cloud.colors) {
      const Vec3 c = Vec3(v[3], v[4], v[5]) / 255.0;
      if (!(c.allFinite() && c.minCoeff() >= 0.0 && c.maxCoeff() <= 1.0)) {
        throw Error(ErrorKind::Data, "line " + std::to_string(line_no) + ": color outside 0-255",
                    line_no);
      }
      cloud.colors->push_back(c);
    }
    if (cloud.gt_labels) cloud.gt_labels->push_back(label_from_double(v[columns - 1], line_no));
    if (end == text.size()) break;
  }
  return cloud;
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  const std::string data = read_file(path);
  if (format == CloudFormat::AsciiXyz) return parse_ascii_cloud(data);
  return parse_ply(data);
}

PointCloud load_cloud(const std::filesystem::path& path) {
  return load_cloud(path, format_from_path(path));
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  validate(cloud);
  std::string out;
  const std::size_t n = cloud.size();
  if (format == CloudFormat::AsciiXyz) {
    out.reserve(n * 48);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = cloud.positions[i];
      out += format_double(p.x()) + ' ' + format_double(p.y()) + ' ' + format_double(p.z());
      if (cloud.colors) {
        const Vec3& c = (*cloud.colors)[i];
        out += ' ' + color_text(c.x()) + ' ' + color_text(c.y()) + ' ' + color_text(c.z());
      }
      if (cloud.gt_labels) out += ' ' + std::to_string((*cloud.gt_labels)[i]);
      out += '\n';
    }
  } else {
    const bool binary = format == CloudFormat::PlyBinary;
    out += "ply\n";
    out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
    out += "element vertex " + std::to_string(n) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    if (cloud.colors) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (cloud.gt_labels) out += "property int label\n";
    if (cloud.gt_instances) out += "property int instance\n";
    out += "end_header\n";
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = cloud.positions[i];
      if (binary) {
        for (int a = 0; a < 3; ++a) {
          const double v = p[a];
          append_le(out, &v, sizeof v);
        }
        if (cloud.colors) {
          for (int a = 0; a < 3; ++a) {
            const std::uint8_t b = color_byte((*cloud.colors)[i][a]);
            out.push_back(static_cast<char>(b));
          }
        }
        if (cloud.gt_labels) {
          const std::int32_t l = (*cloud.gt_labels)[i];
          append_le(out, &l, sizeof l);
        }
        if (cloud.gt_instances) {
          const std::int32_t l = (*cloud.gt_instances)[i];
          append_le(out, &l, sizeof l);
        }
      } else {
        out += format_double(p.x()) + ' ' + format_double(p.y()) + ' ' + format_double(p.z());
        if (cloud.colors) {
          for (int a = 0; a < 3; ++a) out += ' ' + std::to_string(color_byte((*cloud.colors)[i][a]));
        }
        if (cloud.gt_labels) out += ' ' + std::to_string((*cloud.gt_labels)[i]);
        if (cloud.gt_instances) out += ' ' + std::to_string((*cloud.gt_instances)[i]);
        out += '\n';
      }
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace pcseg
