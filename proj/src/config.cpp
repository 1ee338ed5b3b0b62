#include "pcseg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>

#include "pcseg/error.hpp"

namespace pcseg {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string at_line(std::size_t line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

}  // namespace

const std::string* KeyValueSection::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::vector<KeyValueSection> parse_key_value(std::string_view text) {
  std::vector<KeyValueSection> sections(1);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorKind::Parse, at_line(line_no) + "malformed section header", line_no);
      }
      KeyValueSection s;
      s.name = std::string(trim(line.substr(1, line.size() - 2)));
      s.line = line_no;
      sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Parse, at_line(line_no) + "expected 'key = value'", line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorKind::Parse, at_line(line_no) + "empty key", line_no);
    auto& section = sections.back();
    if (section.find(key) != nullptr) {
      throw Error(ErrorKind::Parse, at_line(line_no) + "duplicate key '" + key + "'", line_no);
    }
    section.entries.emplace_back(key, value);
    section.entry_lines.push_back(line_no);
  }
  if (sections.front().entries.empty() && sections.size() > 1) sections.erase(sections.begin());
  return sections;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

double parse_number(std::string_view key, std::string_view value, std::size_t line) {
  double v = 0.0;
  const auto* begin = value.data();
  const auto* end = value.data() + value.size();
  if (!value.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorKind::Parse,
                at_line(line) + "'" + std::string(key) + "' expects a number, got '" + std::string(value) + "'",
                line);
  }
  return v;
}

std::int64_t parse_integer(std::string_view key, std::string_view value, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorKind::Parse,
                at_line(line) + "'" + std::string(key) + "' expects an integer, got '" + std::string(value) + "'",
                line);
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void SceneConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Bounds, what); };
  if (!(radius > 0.0)) fail("radius must be > 0");
  if (descriptor_radius < 0.0) fail("descriptor_radius must be >= 0");
  if (knn == 0) fail("knn must be >= 1");
  if (!(theta_th > 0.0 && theta_th < 90.0)) fail("theta_th must lie in (0, 90) degrees");
  if (!(zeta >= 0.0)) fail("zeta must be >= 0");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(t_seed >= t_merge)) fail("t_seed must be >= t_merge");
  if (lambda_n < 0.0 || lambda_des < 0.0 || lambda_seg < 0.0) fail("lambda weights must be >= 0");
  if (!(lambda_n + lambda_des > 0.0)) fail("lambda_n + lambda_des must be > 0");
  if (!(seed_fraction >= 0.0 && seed_fraction <= 1.0)) fail("seed_fraction must lie in [0, 1]");
}

void SceneConfig::set(std::string_view key, std::string_view value, std::size_t line) {
  auto count = [&]() {
    const auto v = parse_integer(key, value, line);
    if (v < 0) throw Error(ErrorKind::Parse, at_line(line) + "'" + std::string(key) + "' must be >= 0", line);
    return static_cast<std::size_t>(v);
  };
  if (key == "radius") radius = parse_number(key, value, line);
  else if (key == "knn") knn = count();
  else if (key == "theta_th") theta_th = parse_number(key, value, line);
  else if (key == "zeta") zeta = parse_number(key, value, line);
  else if (key == "gamma") gamma = parse_number(key, value, line);
  else if (key == "t_merge") t_merge = parse_number(key, value, line);
  else if (key == "t_seed") t_seed = parse_number(key, value, line);
  else if (key == "lambda_n") lambda_n = parse_number(key, value, line);
  else if (key == "lambda_des") lambda_des = parse_number(key, value, line);
  else if (key == "lambda_seg") lambda_seg = parse_number(key, value, line);
  else if (key == "n_ths") n_ths = count();
  else if (key == "iterations") iterations = count();
  else if (key == "seed_fraction") seed_fraction = parse_number(key, value, line);
  else if (key == "seed") seed = static_cast<std::uint64_t>(count());
  else if (key == "descriptor") {
    try {
      descriptor = descriptor_kind_from_string(value);
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, at_line(line) + e.what(), line);
    }
  } else if (key == "descriptor_radius") descriptor_radius = parse_number(key, value, line);
  else throw Error(ErrorKind::Usage, at_line(line) + "unknown config key '" + std::string(key) + "'", line);
}

std::vector<std::pair<std::string, std::string>> SceneConfig::entries() const {
  return {
      {"radius", format_number(radius)},
      {"knn", std::to_string(knn)},
      {"theta_th", format_number(theta_th)},
      {"zeta", format_number(zeta)},
      {"gamma", format_number(gamma)},
      {"t_merge", format_number(t_merge)},
      {"t_seed", format_number(t_seed)},
      {"lambda_n", format_number(lambda_n)},
      {"lambda_des", format_number(lambda_des)},
      {"lambda_seg", format_number(lambda_seg)},
      {"n_ths", std::to_string(n_ths)},
      {"iterations", std::to_string(iterations)},
      {"seed_fraction", format_number(seed_fraction)},
      {"seed", std::to_string(seed)},
      {"descriptor", std::string(to_string(descriptor))},
      {"descriptor_radius", format_number(descriptor_radius)},
  };
}

std::string SceneConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

SceneConfig SceneConfig::from_text(std::string_view text) {
  SceneConfig c;
  for (const auto& section : parse_key_value(text)) {
    if (!section.name.empty()) {
      throw Error(ErrorKind::Parse, at_line(section.line) + "config files take no sections", section.line);
    }
    for (std::size_t i = 0; i < section.entries.size(); ++i) {
      c.set(section.entries[i].first, section.entries[i].second, section.entry_lines[i]);
    }
  }
  c.validate();
  return c;
}

SceneConfig SceneConfig::from_file(const std::filesystem::path& path) { return from_text(read_text_file(path)); }

}  // namespace pcseg
