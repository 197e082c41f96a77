// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "cli_common.hpp"
#include "emt/rnn.hpp"

namespace emt::cli {

namespace {

struct TrainArgs {
  TaskFlags task;
  std::string config_path;
  std::string out;
  std::string report;
  int save_every = 0;
  TrainConfig flags;
  std::string init = "uniform";
  std::string activation = "tanh";
};

std::string periodic_path(const std::string& out, int iteration) {
  std::filesystem::path p(out);
  char tag[32];
  std::snprintf(tag, sizeof tag, ".iter%07d", iteration);
  return (p.parent_path() / (p.stem().string() + tag + p.extension().string())).string();
}

}  // namespace

void register_train(CLI::App& app, Context& ctx) {
  auto a = std::make_shared<TrainArgs>();
  auto* cmd = app.add_subcommand("train", "train an RNN on a task with Adam and the adaptive horizon");
  a->task.add(cmd);
  cmd->add_option("--config", a->config_path, "JSON training config; flags override it");
  cmd->add_option("--out", a->out, "checkpoint path")->required();
  cmd->add_option("--report", a->report, "per-iteration CSV (default <out>.report.csv)");
  cmd->add_option("--save-every", a->save_every, "write a checkpoint every N iterations")
      ->check(CLI::NonNegativeNumber);
  auto& f = a->flags;
  std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> overrides;
  auto over = [&](CLI::Option* o, std::function<void(TrainConfig&)> apply) { overrides.emplace_back(o, apply); };
  over(cmd->add_option("--hidden", f.hidden, "hidden units"), [a](TrainConfig& c) { c.hidden = a->flags.hidden; });
  over(cmd->add_option("--iters", f.iterations, "iterations"),
       [a](TrainConfig& c) { c.iterations = a->flags.iterations; });
  over(cmd->add_option("--batch", f.batch_size, "batch size"),
       [a](TrainConfig& c) { c.batch_size = a->flags.batch_size; });
  over(cmd->add_option("--lr", f.learning_rate, "learning rate"),
       [a](TrainConfig& c) { c.learning_rate = a->flags.learning_rate; });
  over(cmd->add_option("--l2", f.weight_decay, "L2 weight decay"),
       [a](TrainConfig& c) { c.weight_decay = a->flags.weight_decay; });
  over(cmd->add_option("--clip", f.grad_clip, "global gradient-norm clip (0 disables)"),
       [a](TrainConfig& c) { c.grad_clip = a->flags.grad_clip; });
  over(cmd->add_option("--init", a->init, "uniform | gaussian"),
       [a](TrainConfig& c) { c.init = parse_init_scheme(a->init); });
  over(cmd->add_option("--activation", a->activation, "tanh | identity"),
       [a](TrainConfig& c) { c.activation = parse_activation(a->activation); });
  over(cmd->add_option("--seed", f.rng_seed, "RNG seed"), [a](TrainConfig& c) { c.rng_seed = a->flags.rng_seed; });
  over(cmd->add_option("--h0", f.curriculum.h0_horizon, "initial horizon"),
       [a](TrainConfig& c) { c.curriculum.h0_horizon = a->flags.curriculum.h0_horizon; });
  over(cmd->add_option("--hmax", f.curriculum.h_max, "maximum horizon"),
       [a](TrainConfig& c) { c.curriculum.h_max = a->flags.curriculum.h_max; });
  over(cmd->add_option("--gamma", f.curriculum.gamma, "horizon growth factor"),
       [a](TrainConfig& c) { c.curriculum.gamma = a->flags.curriculum.gamma; });
  over(cmd->add_option("--eps", f.curriculum.epsilon, "horizon loss threshold"),
       [a](TrainConfig& c) { c.curriculum.epsilon = a->flags.curriculum.epsilon; });

  cmd->callback([a, &ctx, overrides] {
    const TaskSpec spec = a->task.resolve();
    TrainConfig config;
    if (!a->config_path.empty()) config = config_from_json(read_json(a->config_path), config);
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(config);
    }
    validate(config);

    ManifestWriter manifest(ctx);
    manifest.seed(config.rng_seed);
    manifest.config({{"task", task_to_json(spec)}, {"train", config_to_json(config)}});

    auto meta_for = [&](int iterations_run) {
      CheckpointMeta meta;
      meta.init_scheme = to_string(config.init);
      meta.rng_seed = config.rng_seed;
      meta.training_meta = {
          {"task", task_to_json(spec)}, {"config", config_to_json(config)}, {"iterations_run", iterations_run}};
      return meta;
    };
    std::vector<std::string> periodic;
    TrainHooks hooks;
    hooks.save_every = a->save_every;
    hooks.on_checkpoint = [&](int it, const RnnParams& p) {
      const std::string path = periodic_path(a->out, it);
      save_checkpoint(p, meta_for(it), path);
      periodic.push_back(path);
    };
    const TrainReport report = train(spec, config, hooks);
    const int ran = static_cast<int>(report.loss.size());

    auto meta = meta_for(ran);
    if (ran > 0) meta.training_meta["final_horizon"] = report.horizon.back();
    save_checkpoint(report.params, meta, a->out);
    const std::string report_path = a->report.empty() ? a->out + ".report.csv" : a->report;
    std::ostringstream csv;
    write_report_csv(csv, report);
    write_text(report_path, csv.str());

    for (const auto& p : periodic) manifest.artifact(p);
    manifest.artifact(a->out);
    manifest.artifact(report_path);
    manifest.finish(a->out);

    nlohmann::json summary = {{"iterations", ran}, {"checkpoint", a->out}, {"report", report_path}};
    if (ran > 0) {
      summary["final_loss"] = report.loss.back();
      summary["final_horizon"] = report.horizon.back();
      summary["final_batch_accuracy"] = report.accuracy.back();
    }
    std::cout << summary.dump() << '\n';
  });
}

}  // namespace emt::cli
