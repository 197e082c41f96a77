// SPDX-License-Identifier: Apache-2.0
//
// Run manifests: what was run, with which seeds, and the hashes of what it
// produced.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace emt {

inline constexpr const char* kVersion = "0.1.0";

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Hash of a file's bytes; throws std::runtime_error if it cannot be read.
std::string hash_file(const std::string& path);

struct RunManifest {
  std::vector<std::string> argv;  // without the program name
  std::string working_directory;
  std::string config_hash;        // hash of the effective configuration
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> artifacts;  // path -> hash
  std::string version = kVersion;
  double wall_seconds = 0.0;
};

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

/// Manifest path for a primary output: "<output>.manifest.json".
std::string manifest_path_for(const std::string& output);

}  // namespace emt
