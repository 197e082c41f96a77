// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emt/manifest.hpp"
#include "emt/tasks.hpp"

namespace emt::cli {

enum Exit : int { kPass = 0, kVerifyFailed = 1, kUsage = 2, kNumerical = 3 };

/// Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  std::vector<std::string> argv;  // without program name
  int exit_code = kPass;
};

/// Collects artifacts for one command and writes its manifest.
class ManifestWriter {
 public:
  explicit ManifestWriter(const Context& ctx);
  void seed(std::uint64_t s) { manifest_.seeds.push_back(s); }
  void config(const nlohmann::json& j) { manifest_.config_hash = fnv1a_hex(j.dump()); }
  void artifact(const std::string& path);
  /// Writes <primary>.manifest.json.
  void finish(const std::string& primary);

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

/// Flags selecting a task: --spec FILE or --task NAME --s --d [--task-seed].
struct TaskFlags {
  std::string spec_path;
  std::string task;
  int s = 0;
  int d = 0;
  std::uint64_t task_seed = 0;
  CLI::Option* spec_opt = nullptr;
  CLI::Option* task_opt = nullptr;

  void add(CLI::App* app);
  TaskSpec resolve() const;
  bool given() const;
};

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
nlohmann::json read_json(const std::string& path);

/// Parses numbers separated by commas, semicolons or whitespace.
std::vector<double> parse_numbers(const std::string& text);

void register_task(CLI::App& app, Context& ctx);
void register_train(CLI::App& app, Context& ctx);
void register_analyze(CLI::App& app, Context& ctx);
void register_verify(CLI::App& app, Context& ctx);
void register_circuit(CLI::App& app, Context& ctx);
void register_rerun(CLI::App& app, Context& ctx);

/// Full command-line entry; returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace emt::cli
