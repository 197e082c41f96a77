// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <memory>
#include <sstream>

#include "cli_common.hpp"

namespace emt::cli {

namespace {

struct TaskArgs {
  TaskFlags task;
  std::string out;
  int horizon = 0;
  std::string inputs;
  std::uint64_t seed = 0;
  bool with_inputs = false;
};

void emit(const Context& ctx, const std::string& out, const std::string& text, const nlohmann::json& config,
          std::optional<std::uint64_t> seed) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  ManifestWriter m(ctx);
  m.config(config);
  if (seed) m.seed(*seed);
  write_text(out, text);
  m.artifact(out);
  m.finish(out);
}

}  // namespace

void register_task(CLI::App& app, Context& ctx) {
  auto* task = app.add_subcommand("task", "generate task specs and oracle episodes");
  task->require_subcommand(1);

  auto* gen = task->add_subcommand("gen", "write a task spec as JSON");
  auto args = std::make_shared<TaskArgs>();
  args->task.add(gen);
  gen->add_option("--out", args->out, "output path (stdout if omitted)");
  gen->callback([args, &ctx] {
    const TaskSpec spec = args->task.resolve();
    const auto j = task_to_json(spec);
    emit(ctx, args->out, j.dump(2) + "\n", j, std::nullopt);
  });

  auto* oracle = task->add_subcommand("oracle", "unroll the task on one input episode and write CSV");
  args = std::make_shared<TaskArgs>();
  args->task.add(oracle);
  oracle->add_option("--horizon", args->horizon, "output-phase length")->check(CLI::NonNegativeNumber);
  auto* inputs_opt =
      oracle->add_option("--inputs", args->inputs, "s*d entries in {-1,1}, row-major, separated by , ; or space");
  auto* seed_opt = oracle->add_option("--seed", args->seed, "seed for random inputs");
  inputs_opt->excludes(seed_opt);
  oracle->add_flag("--with-inputs", args->with_inputs, "also write the input-phase rows");
  oracle->add_option("--out", args->out, "output CSV (stdout if omitted)");
  oracle->callback([args, &ctx, inputs_opt] {
    const TaskSpec spec = args->task.resolve();
    RealMatrix inputs;
    std::optional<std::uint64_t> seed;
    if (inputs_opt->count() > 0) {
      const auto v = parse_numbers(args->inputs);
      if (v.size() != static_cast<std::size_t>(spec.s * spec.d)) {
        throw UsageError("--inputs needs " + std::to_string(spec.s * spec.d) + " entries, got " +
                         std::to_string(v.size()));
      }
      inputs = Eigen::Map<const RealMatrix>(v.data(), spec.s, spec.d);
    } else {
      Rng rng(args->seed);
      inputs = sample_inputs(spec, rng);
      seed = args->seed;
    }
    const Episode ep = evolve_oracle(spec, inputs, args->horizon);
    std::ostringstream os;
    write_episode_csv(os, ep, args->with_inputs);
    nlohmann::json config = {{"task", task_to_json(spec)}, {"horizon", args->horizon}};
    emit(ctx, args->out, os.str(), config, seed);
  });
}

}  // namespace emt::cli
