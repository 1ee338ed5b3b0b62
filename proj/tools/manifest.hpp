#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pcseg/config.hpp"

namespace pcseg::cli {

/// Everything a command needs to run: its name, its own options and the
/// resolved scene config. A manifest is an Invocation plus run metadata.
struct Invocation {
  std::string command;
  std::map<std::string, std::string> args;
  SceneConfig config;

  bool has(const std::string& key) const { return args.count(key) > 0 && !args.at(key).empty(); }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
};

/// 64-bit FNV-1a over the bytes of the given files, in order.
std::uint64_t fnv1a_files(const std::vector<std::filesystem::path>& files);
std::string hex64(std::uint64_t v);

struct Manifest {
  Invocation invocation;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::string input_checksum;
  double wall_time_s = 0.0;
};

std::string manifest_text(const Manifest& m);
void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

std::string version_string();

}  // namespace pcseg::cli
