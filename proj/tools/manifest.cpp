#include "manifest.hpp"

#include <cstdio>
#include <fstream>

#include "pcseg/error.hpp"

namespace pcseg::cli {

const std::string& Invocation::get(const std::string& key) const {
  const auto it = args.find(key);
  if (it == args.end() || it->second.empty()) throw Error(ErrorKind::Usage, "missing option --" + key);
  return it->second;
}

std::string Invocation::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? args.at(key) : fallback;
}

std::uint64_t fnv1a_files(const std::vector<std::filesystem::path>& files) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + f.string() + "'");
    while (in) {
      in.read(buf, sizeof buf);
      const auto got = in.gcount();
      for (std::streamsize i = 0; i < got; ++i) {
        h ^= static_cast<unsigned char>(buf[i]);
        h *= 0x100000001b3ull;
      }
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string version_string() {
  std::string v = "pcseg 1.0.0";
#if defined(__clang__)
  v += " clang " __clang_version__;
#elif defined(__GNUC__)
  v += " gcc " __VERSION__;
#endif
  return v;
}

std::string manifest_text(const Manifest& m) {
  std::string out = "# pcseg run manifest\n";
  out += "command = " + m.invocation.command + "\n";
  out += "version = " + version_string() + "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", m.wall_time_s);
  out += "wall_time = " + std::string(buf) + "\n";
  out += "input_checksum = " + m.input_checksum + "\n";
  for (std::size_t i = 0; i < m.inputs.size(); ++i) out += "input." + std::to_string(i) + " = " + m.inputs[i].string() + "\n";
  for (std::size_t i = 0; i < m.outputs.size(); ++i) {
    out += "output." + std::to_string(i) + " = " + m.outputs[i].string() + "\n";
  }
  out += "\n[args]\n";
  for (const auto& [k, v] : m.invocation.args) out += k + " = " + v + "\n";
  out += "\n[config]\n" + m.invocation.config.to_text();
  return out;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  file << manifest_text(m);
  if (!file) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

Manifest read_manifest(const std::filesystem::path& path) {
  Manifest m;
  bool have_command = false;
  for (const auto& section : parse_key_value(read_text_file(path))) {
    for (std::size_t i = 0; i < section.entries.size(); ++i) {
      const auto& [key, value] = section.entries[i];
      const std::size_t line = section.entry_lines[i];
      if (section.name.empty()) {
        if (key == "command") {
          m.invocation.command = value;
          have_command = true;
        } else if (key == "wall_time") {
          m.wall_time_s = parse_number(key, value, line);
        } else if (key == "input_checksum") {
          m.input_checksum = value;
        } else if (key.rfind("input.", 0) == 0) {
          m.inputs.emplace_back(value);
        } else if (key.rfind("output.", 0) == 0) {
          m.outputs.emplace_back(value);
        }
      } else if (section.name == "args") {
        m.invocation.args[key] = value;
      } else if (section.name == "config") {
        m.invocation.config.set(key, value, line);
      } else {
        throw Error(ErrorKind::Parse, "line " + std::to_string(section.line) + ": unknown manifest section '" +
                                          section.name + "'",
                    section.line);
      }
    }
  }
  if (!have_command) throw Error(ErrorKind::Parse, "manifest '" + path.string() + "' names no command");
  m.invocation.config.validate();
  return m;
}

}  // namespace pcseg::cli
