// SPDX-License-Identifier: Apache-2.0
#include "cli_common.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "emt/error.hpp"

namespace emt::cli {

ManifestWriter::ManifestWriter(const Context& ctx) : start_(std::chrono::steady_clock::now()) {
  manifest_.argv = ctx.argv;
  manifest_.working_directory = std::filesystem::current_path().string();
}

void ManifestWriter::artifact(const std::string& path) { manifest_.artifacts[path] = hash_file(path); }

void ManifestWriter::finish(const std::string& primary) {
  manifest_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  save_manifest(manifest_path_for(primary), manifest_);
}

void TaskFlags::add(CLI::App* app) {
  spec_opt = app->add_option("--spec", spec_path, "task spec JSON");
  task_opt = app->add_option("--task", task, "repeat-copy | compose-copy");
  auto* s_opt = app->add_option("--s", s, "number of variables")->check(CLI::PositiveNumber);
  auto* d_opt = app->add_option("--d", d, "variable dimension")->check(CLI::PositiveNumber);
  auto* seed_opt = app->add_option("--task-seed", task_seed, "seed for compose-copy selection");
  spec_opt->excludes(task_opt)->excludes(s_opt)->excludes(d_opt)->excludes(seed_opt);
  task_opt->needs(s_opt)->needs(d_opt);
}

bool TaskFlags::given() const { return spec_opt->count() > 0 || task_opt->count() > 0; }

TaskSpec TaskFlags::resolve() const {
  if (spec_opt->count() > 0) return load_task(spec_path);
  if (task_opt->count() == 0) throw UsageError("either --spec or --task is required");
  if (task == "repeat-copy") return make_repeat_copy(s, d);
  if (task == "compose-copy") return make_compose_copy(s, d, task_seed);
  throw UsageError("unknown task '" + task + "' (expected repeat-copy or compose-copy)");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::vector<double> parse_numbers(const std::string& text) {
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + tok + "'");
    }
    if (used != tok.size()) throw UsageError("not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Variable-binding RNN lab: tasks, training, circuits and analysis", "emt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Context ctx{args};
  register_task(app, ctx);
  register_train(app, ctx);
  register_analyze(app, ctx);
  register_verify(app, ctx);
  register_circuit(app, ctx);
  register_rerun(app, ctx);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return ctx.exit_code;
}

}  // namespace emt::cli
