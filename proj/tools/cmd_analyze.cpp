// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>

#include "cli_common.hpp"
#include "emt/analysis.hpp"
#include "emt/svg.hpp"

namespace emt::cli {

namespace {

struct AnalyzeArgs {
  TaskFlags task;
  std::string checkpoint;
  std::string out;
  double mag_threshold = 0.97;
  double angle_tol = 0.15;
  double alpha = 0.0;
  double transient_threshold = 0.97;
  std::string propagation = "forward";
  int probe_episodes = 64;
  double var_threshold = 0.99;
  std::uint64_t probe_seed = 0;
  std::string basis = "computed";
  std::string inputs;
  std::uint64_t seed = 0;
  int horizon = -1;
  bool normalize = false;
};

std::string stem_of(const std::string& out) {
  for (const char* ext : {".json", ".csv", ".svg"}) {
    const std::string e(ext);
    if (out.size() > e.size() && out.compare(out.size() - e.size(), e.size(), e) == 0) {
      return out.substr(0, out.size() - e.size());
    }
  }
  return out;
}

nlohmann::json base_config(const AnalyzeArgs& a, const std::string& kind, const TaskSpec& spec) {
  return {{"kind", kind},
          {"checkpoint_hash", hash_file(a.checkpoint)},
          {"task", task_to_json(spec)},
          {"mag_threshold", a.mag_threshold},
          {"angle_tol", a.angle_tol},
          {"alpha", a.alpha},
          {"transient_threshold", a.transient_threshold},
          {"propagation", a.propagation},
          {"probe_episodes", a.probe_episodes},
          {"var_threshold", a.var_threshold},
          {"probe_seed", a.probe_seed},
          {"basis", a.basis}};
}

MemoryOptions memory_options(const AnalyzeArgs& a, int s) {
  MemoryOptions o;
  o.s = s;
  o.alpha = a.alpha;
  o.transient_threshold = a.transient_threshold;
  if (a.propagation == "forward") {
    o.propagation = Propagation::forward;
  } else if (a.propagation == "transpose") {
    o.propagation = Propagation::transpose;
  } else {
    throw UsageError("--propagation must be forward or transpose");
  }
  o.probe_episodes = a.probe_episodes;
  o.var_threshold = a.var_threshold;
  o.probe_seed = a.probe_seed;
  return o;
}

std::string matrix_csv(const RealMatrix& m, const std::string& row_label) {
  std::string out = row_label;
  for (Eigen::Index j = 0; j < m.cols(); ++j) out += ",t" + std::to_string(j + 1);
  out += '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += std::to_string(i + 1);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void add_common(CLI::App* cmd, AnalyzeArgs& a) {
  a.task.add(cmd);
  cmd->add_option("--checkpoint", a.checkpoint, "checkpoint JSON")->required();
  cmd->add_option("--out", a.out, "output path stem")->required();
}

void add_memory_flags(CLI::App* cmd, AnalyzeArgs& a) {
  cmd->add_option("--alpha", a.alpha, "weight of W_uh in the last variable memory")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--transient-threshold", a.transient_threshold, "eigenvalue magnitude below which modes are transient");
  cmd->add_option("--propagation", a.propagation, "forward | transpose");
  cmd->add_option("--probe-episodes", a.probe_episodes, "episodes used to estimate the complement")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--var-threshold", a.var_threshold, "explained variance kept in the complement");
  cmd->add_option("--probe-seed", a.probe_seed, "seed for probe episodes");
}

}  // namespace

void register_analyze(CLI::App& app, Context& ctx) {
  auto* analyze = app.add_subcommand("analyze", "inspect a checkpoint");
  analyze->require_subcommand(1);

  {
    auto a = std::make_shared<AnalyzeArgs>();
    auto* cmd = analyze->add_subcommand("spectrum", "compare eigenvalue arguments with the circuit operator");
    add_common(cmd, *a);
    cmd->add_option("--mag-threshold", a->mag_threshold, "minimum |lambda| for learned eigenvalues");
    cmd->callback([a, &ctx] {
      const TaskSpec spec = a->task.resolve();
      const Checkpoint ck = load_checkpoint(a->checkpoint, ExpectedDims{-1, spec.d});
      ManifestWriter m(ctx);
      m.config(base_config(*a, "spectrum", spec));
      const SpectrumReport r = spectrum_mae(build_phi(spec), ck.params.w_hh, a->mag_threshold);
      const std::string stem = stem_of(a->out);
      const auto j = spectrum_to_json(r);
      write_text(stem + ".json", j.dump(2) + "\n");
      const auto eig = eig_general(ck.params.w_hh).eigenvalues;
      write_text(stem + ".svg", svg::eigen_scatter(eig, spec.s, "W_hh eigenvalues"));
      m.artifact(stem + ".json");
      m.artifact(stem + ".svg");
      m.finish(stem + ".json");
      std::cout << nlohmann::json{{"mae", j["mae"]}, {"indeterminate", j["indeterminate"]}}.dump() << '\n';
    });
  }
  {
    auto a = std::make_shared<AnalyzeArgs>();
    auto* cmd = analyze->add_subcommand("memories", "extract variable memories and the learned interaction");
    add_common(cmd, *a);
    add_memory_flags(cmd, *a);
    cmd->callback([a, &ctx] {
      const TaskSpec spec = a->task.resolve();
      const Checkpoint ck = load_checkpoint(a->checkpoint, ExpectedDims{-1, spec.d});
      ManifestWriter m(ctx);
      m.config(base_config(*a, "memories", spec));
      const auto basis = compute_variable_memories(ck.params, memory_options(*a, spec.s));
      const auto inter = extract_interaction(basis, ck.params.w_hh);
      nlohmann::json j = {
          {"s", basis.s},
          {"d", basis.d},
          {"alpha", basis.alpha},
          {"transient_threshold", basis.transient_threshold},
          {"condition", basis.condition},
          {"well_conditioned", basis.well_conditioned},
          {"transients_removed", basis.transients_removed},
          {"psi", matrix_to_json(basis.psi)},
          {"dual", matrix_to_json(basis.dual)},
          {"complement", matrix_to_json(basis.complement)},
          {"phi_learned", matrix_to_json(inter.phi_learned)},
          {"cross_in", matrix_to_json(inter.cross_in)},
          {"cross_out", matrix_to_json(inter.cross_out)},
          {"off_circuit_ratio", inter.off_circuit_ratio},
          {"phi_error_frobenius", (inter.phi_learned - build_phi(spec)).norm()},
      };
      const std::string stem = stem_of(a->out);
      write_text(stem + ".json", j.dump(2) + "\n");
      write_text(stem + ".svg", svg::heatmap(inter.phi_learned, "learned interaction"));
      m.artifact(stem + ".json");
      m.artifact(stem + ".svg");
      m.finish(stem + ".json");
      std::cout << nlohmann::json{{"condition", basis.condition},
                                  {"well_conditioned", basis.well_conditioned},
                                  {"complement_rank", basis.complement.cols()},
                                  {"off_circuit_ratio", inter.off_circuit_ratio},
                                  {"phi_error_frobenius", j["phi_error_frobenius"]}}
                       .dump()
                << '\n';
    });
  }
  {
    auto a = std::make_shared<AnalyzeArgs>();
    auto* cmd = analyze->add_subcommand("project", "hidden-state activity in the variable-memory basis");
    add_common(cmd, *a);
    add_memory_flags(cmd, *a);
    cmd->add_option("--basis", a->basis, "computed | blueprint");
    auto* inputs_opt = cmd->add_option("--inputs", a->inputs, "s*d entries in {-1,1}, row-major");
    cmd->add_option("--seed", a->seed, "seed for random inputs")->excludes(inputs_opt);
    cmd->add_option("--horizon", a->horizon, "output-phase length (default 2s)");
    cmd->add_flag("--normalize", a->normalize, "scale each variable memory to unit deviation");
    cmd->callback([a, &ctx, inputs_opt] {
      const TaskSpec spec = a->task.resolve();
      const Checkpoint ck = load_checkpoint(a->checkpoint, ExpectedDims{-1, spec.d});
      ManifestWriter m(ctx);
      auto config = base_config(*a, "project", spec);
      config["normalize"] = a->normalize;
      RealMatrix inputs;
      if (inputs_opt->count() > 0) {
        const auto v = parse_numbers(a->inputs);
        if (v.size() != static_cast<std::size_t>(spec.s * spec.d)) throw UsageError("--inputs has the wrong length");
        inputs = Eigen::Map<const RealMatrix>(v.data(), spec.s, spec.d);
        config["inputs"] = v;
      } else {
        Rng rng(a->seed);
        inputs = sample_inputs(spec, rng);
        m.seed(a->seed);
      }
      const int horizon = a->horizon < 0 ? 2 * spec.s : a->horizon;
      config["horizon"] = horizon;
      m.config(config);

      std::optional<CircuitRnn> circuit;
      if (!ck.meta.blueprint.is_null()) circuit = CircuitRnn{ck.params, blueprint_from_json(ck.meta.blueprint)};
      VariableMemoryBasis basis;
      if (a->basis == "blueprint") {
        if (!circuit) throw UsageError("--basis blueprint needs a circuit checkpoint");
        basis = make_basis(circuit->blueprint.psi, spec.s, spec.d);
      } else if (a->basis == "computed") {
        basis = compute_variable_memories(ck.params, memory_options(*a, spec.s));
      } else {
        throw UsageError("--basis must be computed or blueprint");
      }
      const Trajectory traj = circuit ? simulate_circuit(*circuit, inputs, horizon) : forward(ck.params, inputs, horizon);
      const RealMatrix act = project_hidden(basis, traj.hidden, a->normalize);
      const std::string stem = stem_of(a->out);
      write_text(stem + ".csv", matrix_csv(act, "coordinate"));
      write_text(stem + ".svg", svg::heatmap(act, "variable-memory activity"));
      m.artifact(stem + ".csv");
      m.artifact(stem + ".svg");
      m.finish(stem + ".csv");
    });
  }
  {
    auto a = std::make_shared<AnalyzeArgs>();
    auto* cmd = analyze->add_subcommand("clusters", "count near-unit-circle eigenvalues per root of unity");
    add_common(cmd, *a);
    cmd->add_option("--mag-threshold", a->mag_threshold, "minimum |lambda|");
    cmd->add_option("--angle-tol", a->angle_tol, "maximum angular distance to a cluster center");
    cmd->callback([a, &ctx] {
      const TaskSpec spec = a->task.resolve();
      const Checkpoint ck = load_checkpoint(a->checkpoint, ExpectedDims{-1, spec.d});
      ManifestWriter m(ctx);
      m.config(base_config(*a, "clusters", spec));
      const auto r = eig_cluster_report(ck.params.w_hh, spec.s, a->mag_threshold, a->angle_tol);
      const std::string stem = stem_of(a->out);
      const auto j = clusters_to_json(r);
      write_text(stem + ".json", j.dump(2) + "\n");
      m.artifact(stem + ".json");
      m.finish(stem + ".json");
      std::cout << j.dump() << '\n';
    });
  }
}

}  // namespace emt::cli
