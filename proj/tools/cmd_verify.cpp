// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <random>

#include "cli_common.hpp"
#include "emt/circuit.hpp"
#include "emt/rnn.hpp"

namespace emt::cli {

namespace {

void report(Context& ctx, const std::string& out, nlohmann::json j, bool pass) {
  j["pass"] = pass;
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    ManifestWriter m(ctx);
    m.config(j);
    write_text(out, text);
    m.artifact(out);
    m.finish(out);
  }
  ctx.exit_code = pass ? kPass : kVerifyFailed;
}

// Largest relative error between BPTT and central differences over every
// parameter entry. Relative to max(|a|, |b|, 1e-6) so vanishing gradients
// are compared absolutely.
double gradcheck_one(RnnParams p, const std::vector<Episode>& batch, int horizon, double step) {
  const LossResult exact = loss_and_grads(p, batch, horizon);
  double worst = 0.0;
  auto probe = [&](double* param, const double* grad, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double keep = param[i];
      param[i] = keep + step;
      const double up = loss_and_grads(p, batch, horizon).loss;
      param[i] = keep - step;
      const double down = loss_and_grads(p, batch, horizon).loss;
      param[i] = keep;
      const double fd = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
      worst = std::max(worst, std::abs(fd - grad[i]) / denom);
    }
  };
  probe(p.w_uh.data(), exact.grads.w_uh.data(), p.w_uh.size());
  probe(p.w_hh.data(), exact.grads.w_hh.data(), p.w_hh.size());
  probe(p.w_r.data(), exact.grads.w_r.data(), p.w_r.size());
  probe(p.bias.data(), exact.grads.bias.data(), p.bias.size());
  return worst;
}

std::vector<int> brute_force_mask(const RealMatrix& phi) {
  const int n = static_cast<int>(phi.rows());
  const std::size_t target = numerical_rank(phi);
  std::vector<int> best(static_cast<std::size_t>(n), 1);
  int best_size = n;
  for (std::uint64_t bits = 0; bits < (1ULL << n); ++bits) {
    const int size = std::popcount(bits);
    if (size >= best_size) continue;
    std::vector<int> m(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1U);
    if (masked_rank(phi, m) == target) {
      best = std::move(m);
      best_size = size;
    }
  }
  return best;
}

struct VerifyArgs {
  TaskFlags task;
  std::string out;
  std::uint64_t seed = 0;
  int steps = 200;
  int instances = 20;
  int n_f = 12;
  int n_h = 6;
  std::string activation = "tanh";
  double tol = 1e-9;
  int hidden = 0;
  std::string embedding = "standard";
  int horizon = 100;
  int episodes = 100;
  int nets = 10;
  int max_hidden = 8;
  int max_horizon = 12;
  double fd_step = 1e-6;
};

}  // namespace

void register_verify(CLI::App& app, Context& ctx) {
  auto* verify = app.add_subcommand("verify", "numerical checks with pass/fail exit codes");
  verify->require_subcommand(1);

  {
    auto a = std::make_shared<VerifyArgs>();
    auto* cmd = verify->add_subcommand("conjugacy", "memory-model vs RNN trajectories on random instances");
    cmd->add_option("--steps", a->steps)->check(CLI::NonNegativeNumber);
    cmd->add_option("--instances", a->instances)->check(CLI::PositiveNumber);
    cmd->add_option("--nf", a->n_f, "feature dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--nh", a->n_h, "memory count")->check(CLI::PositiveNumber);
    cmd->add_option("--activation", a->activation, "tanh | identity");
    cmd->add_option("--seed", a->seed);
    cmd->add_option("--tol", a->tol);
    cmd->add_option("--out", a->out, "report path (stdout if omitted)");
    cmd->callback([a, &ctx] {
      Rng rng(a->seed);
      const Activation act = parse_activation(a->activation);
      std::normal_distribution<double> normal(0.0, 2.0);
      double worst = 0.0;
      double worst_norm = 0.0;
      bool norms_ok = true;
      for (int i = 0; i < a->instances; ++i) {
        const GsemmModel model = random_gsemm(a->n_f, a->n_h, act, rng);
        RealVector v0(a->n_f);
        for (auto& x : v0) x = normal(rng);
        const auto r = verify_conjugacy(model, v0, a->steps);
        worst = std::max(worst, r.max_deviation);
        worst_norm = std::max(worst_norm, r.operator_norm);
        norms_ok = norms_ok && r.norm_condition_met;
      }
      report(ctx, a->out,
             {{"check", "conjugacy"},
              {"instances", a->instances},
              {"steps", a->steps},
              {"max_deviation", worst},
              {"max_operator_norm", worst_norm},
              {"norm_condition_met", norms_ok},
              {"tolerance", a->tol}},
             norms_ok && worst <= a->tol);
    });
  }
  {
    auto a = std::make_shared<VerifyArgs>();
    auto* cmd = verify->add_subcommand("circuit", "constructed circuit RNN vs the task oracle");
    a->task.add(cmd);
    cmd->add_option("--hidden", a->hidden, "hidden size (default s*d)");
    cmd->add_option("--embedding", a->embedding, "standard | random");
    cmd->add_option("--horizon", a->horizon)->check(CLI::NonNegativeNumber);
    cmd->add_option("--episodes", a->episodes)->check(CLI::PositiveNumber);
    cmd->add_option("--seed", a->seed);
    cmd->add_option("--tol", a->tol);
    cmd->add_option("--out", a->out, "report path (stdout if omitted)");
    cmd->callback([a, &ctx] {
      const TaskSpec spec = a->task.resolve();
      Rng rng(a->seed);
      const int hidden = a->hidden > 0 ? a->hidden : spec.s * spec.d;
      const CircuitRnn c = build_circuit_rnn(spec, hidden, parse_embedding(a->embedding), rng);
      double worst = 0.0;
      double sign_acc = 1.0;
      for (int e = 0; e < a->episodes; ++e) {
        const Episode ep = evolve_oracle(spec, sample_inputs(spec, rng), a->horizon);
        const Trajectory tr = simulate_circuit(c, ep.inputs, a->horizon);
        const RealMatrix out = tr.outputs.bottomRows(a->horizon);
        if (a->horizon > 0) worst = std::max(worst, (out - ep.targets).cwiseAbs().maxCoeff());
        sign_acc = std::min(sign_acc, sign_match_fraction(out, ep.targets));
      }
      report(ctx, a->out,
             {{"check", "circuit"},
              {"task", task_to_json(spec)},
              {"hidden", hidden},
              {"embedding", a->embedding},
              {"episodes", a->episodes},
              {"horizon", a->horizon},
              {"max_abs_error", worst},
              {"min_sign_accuracy", sign_acc},
              {"tolerance", a->tol}},
             worst <= a->tol);
    });
  }
  {
    auto a = std::make_shared<VerifyArgs>();
    a->tol = 1e-5;
    auto* cmd = verify->add_subcommand("gradcheck", "BPTT against central finite differences");
    cmd->add_option("--nets", a->nets)->check(CLI::PositiveNumber);
    cmd->add_option("--max-hidden", a->max_hidden)->check(CLI::PositiveNumber);
    cmd->add_option("--max-horizon", a->max_horizon)->check(CLI::PositiveNumber);
    cmd->add_option("--step", a->fd_step);
    cmd->add_option("--seed", a->seed);
    cmd->add_option("--tol", a->tol);
    cmd->add_option("--out", a->out, "report path (stdout if omitted)");
    cmd->callback([a, &ctx] {
      Rng rng(a->seed);
      std::uniform_int_distribution<int> pick_h(1, a->max_hidden);
      std::uniform_int_distribution<int> pick_t(1, a->max_horizon);
      std::uniform_int_distribution<int> pick_sd(1, 3);
      std::normal_distribution<double> normal(0.0, 0.1);
      double worst = 0.0;
      nlohmann::json nets = nlohmann::json::array();
      for (int i = 0; i < a->nets; ++i) {
        const int s = pick_sd(rng);
        const int d = pick_sd(rng);
        const int horizon = pick_t(rng);
        const TaskSpec spec = make_compose_copy(s, d, rng());
        RnnParams p = init_params(pick_h(rng), d, InitScheme::gaussian, rng);
        for (auto& b : p.bias) b = normal(rng);
        const auto batch = sample_batch(spec, 3, horizon, rng);
        const double err = gradcheck_one(p, batch, horizon, a->fd_step);
        worst = std::max(worst, err);
        nets.push_back({{"hidden", p.hidden()}, {"s", s}, {"d", d}, {"horizon", horizon}, {"max_rel_error", err}});
      }
      report(ctx, a->out, {{"check", "gradcheck"}, {"nets", nets}, {"max_rel_error", worst}, {"tolerance", a->tol}},
             worst <= a->tol);
    });
  }
  {
    auto a = std::make_shared<VerifyArgs>();
    auto* cmd = verify->add_subcommand("mask", "basis mask against exhaustive search");
    a->task.add(cmd);
    cmd->add_option("--out", a->out, "report path (stdout if omitted)");
    cmd->callback([a, &ctx] {
      const TaskSpec spec = a->task.resolve();
      const RealMatrix phi = build_phi(spec);
      const MaskResult r = optimize_mask(phi, circuit_readout(spec.s, spec.d));
      const int size = static_cast<int>(std::count(r.mask.begin(), r.mask.end(), 1));
      nlohmann::json j = {{"check", "mask"},
                          {"task", task_to_json(spec)},
                          {"mask", r.mask},
                          {"reachable", r.reachable},
                          {"rank_phi", r.rank_phi},
                          {"rank_masked", r.rank_masked},
                          {"cardinality", size}};
      bool pass = r.rank_masked == r.rank_phi;
      if (phi.rows() <= 20) {
        const auto best = brute_force_mask(phi);
        const int best_size = static_cast<int>(std::count(best.begin(), best.end(), 1));
        j["exhaustive_cardinality"] = best_size;
        pass = pass && best_size == size;
      }
      report(ctx, a->out, j, pass);
    });
  }
}

void register_circuit(CLI::App& app, Context& ctx) {
  auto* circuit = app.add_subcommand("circuit", "construct circuit RNNs");
  circuit->require_subcommand(1);
  auto a = std::make_shared<VerifyArgs>();
  auto with_mask = std::make_shared<bool>(false);
  auto* cmd = circuit->add_subcommand("build", "write the circuit RNN for a task as a checkpoint");
  a->task.add(cmd);
  cmd->add_option("--hidden", a->hidden, "hidden size (default s*d)");
  cmd->add_option("--embedding", a->embedding, "standard | random");
  cmd->add_option("--seed", a->seed);
  cmd->add_flag("--mask", *with_mask, "store the optimised basis mask in the blueprint");
  cmd->add_option("--out", a->out, "checkpoint path")->required();
  cmd->callback([a, with_mask, &ctx] {
    const TaskSpec spec = a->task.resolve();
    Rng rng(a->seed);
    const int hidden = a->hidden > 0 ? a->hidden : spec.s * spec.d;
    CircuitRnn c = build_circuit_rnn(spec, hidden, parse_embedding(a->embedding), rng);
    if (*with_mask) c.blueprint.mask = optimize_mask(c.blueprint.phi, circuit_readout(spec.s, spec.d)).mask;
    CheckpointMeta meta;
    meta.init_scheme = "circuit";
    meta.rng_seed = a->seed;
    meta.blueprint = blueprint_to_json(c.blueprint);
    ManifestWriter m(ctx);
    m.seed(a->seed);
    m.config({{"task", task_to_json(spec)}, {"hidden", hidden}, {"embedding", a->embedding}, {"mask", *with_mask}});
    save_checkpoint(c.params, meta, a->out);
    m.artifact(a->out);
    m.finish(a->out);
  });
}

void register_rerun(CLI::App& app, Context& ctx) {
  auto path = std::make_shared<std::string>();
  auto* cmd = app.add_subcommand("rerun", "re-execute a manifest and compare artifact hashes");
  cmd->add_option("--manifest", *path, "manifest JSON")->required();
  cmd->callback([path, &ctx] {
    const RunManifest m = load_manifest(*path);
    if (m.argv.empty() || m.argv.front() == "rerun") throw UsageError("manifest does not describe a rerunnable command");
    const auto cwd = std::filesystem::current_path();
    if (!m.working_directory.empty()) std::filesystem::current_path(m.working_directory);
    const int code = run(m.argv);
    nlohmann::json mismatches = nlohmann::json::array();
    for (const auto& [artifact, hash] : m.artifacts) {
      std::string now;
      try {
        now = hash_file(artifact);
      } catch (const std::exception&) {
        now = "missing";
      }
      if (now != hash) mismatches.push_back({{"path", artifact}, {"expected", hash}, {"actual", now}});
    }
    std::filesystem::current_path(cwd);
    const bool pass = code == kPass && mismatches.empty();
    std::cout << nlohmann::json{{"command_exit", code}, {"mismatches", mismatches}, {"pass", pass}}.dump() << '\n';
    ctx.exit_code = code != kPass ? code : (pass ? kPass : kVerifyFailed);
  });
}

}  // namespace emt::cli
