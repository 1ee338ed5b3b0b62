#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcseg/descriptors.hpp"

namespace pcseg {

/// One "[name]" block of a key = value file. Lines before the first header
/// belong to a section with an empty name.
struct KeyValueSection {
  std::string name;
  std::size_t line = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::size_t> entry_lines;

  const std::string* find(std::string_view key) const;
};

/// Parses "key = value" lines with '#' comments and optional "[section]"
/// headers. Duplicate keys within a section are a parse error.
std::vector<KeyValueSection> parse_key_value(std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

double parse_number(std::string_view key, std::string_view value, std::size_t line = 0);
std::int64_t parse_integer(std::string_view key, std::string_view value, std::size_t line = 0);

/// Shortest decimal string that reads back to the same double.
std::string format_number(double v);

struct SceneConfig {
  double radius = 0.05;              // neighborhood radius r (m)
  std::size_t knn = 8;               // K
  double theta_th = 60.0;            // degrees
  double zeta = 0.05;                // curvature difference for new seeds
  double gamma = 0.75;               // confidence gate
  double t_merge = 1.25;             // pseudo-label propagation score
  double t_seed = 1.5;               // fuse-and-freeze score
  double lambda_n = 1.0;
  double lambda_des = 1.0;
  double lambda_seg = 1.0;
  std::size_t n_ths = 0;             // minimum region size kept by the merge loop
  std::size_t iterations = 8;        // N_Total
  double seed_fraction = 0.002;      // lowest-curvature share seeded in grow
  std::uint64_t seed = 0;
  DescriptorKind descriptor = DescriptorKind::AdaptedPfh;
  double descriptor_radius = 0.0;    // 0 means use radius

  double effective_descriptor_radius() const { return descriptor_radius > 0.0 ? descriptor_radius : radius; }

  /// Throws Bounds naming the first offending field.
  void validate() const;

  /// Applies one key; throws Usage for unknown keys, Parse for bad values.
  void set(std::string_view key, std::string_view value, std::size_t line = 0);

  /// All fields as "key = value" lines in a fixed order.
  std::string to_text() const;
  std::vector<std::pair<std::string, std::string>> entries() const;

  static SceneConfig from_text(std::string_view text);
  static SceneConfig from_file(const std::filesystem::path& path);
};

}  // namespace pcseg
