// SPDX-License-Identifier: Apache-2.0
#include "emt/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "emt/error.hpp"

namespace emt {

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  const std::string bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  return fnv1a_hex(bytes);
}

nlohmann::json manifest_to_json(const RunManifest& m) {
  return {{"argv", m.argv},
          {"working_directory", m.working_directory},
          {"config_hash", m.config_hash},
          {"seeds", m.seeds},
          {"artifacts", m.artifacts},
          {"version", m.version},
          {"wall_seconds", m.wall_seconds}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.working_directory = j.value("working_directory", "");
    m.config_hash = j.value("config_hash", "");
    m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    m.version = j.value("version", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

void save_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << manifest_to_json(m).dump(2) << '\n';
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return manifest_from_json(j);
}

std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

}  // namespace emt
