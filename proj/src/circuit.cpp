// SPDX-License-Identifier: Apache-2.0
#include "emt/circuit.hpp"

#include <random>

namespace emt {

namespace {

RealMatrix random_orthogonal(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Fix column signs so the draw is uniform and deterministic.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  return q;
}

}  // namespace

std::string to_string(Embedding e) { return e == Embedding::standard ? "standard" : "random"; }

Embedding parse_embedding(const std::string& s) {
  if (s == "standard") return Embedding::standard;
  if (s == "random") return Embedding::random;
  throw InvalidArgument("unknown embedding '" + s + "'");
}

RealMatrix build_phi(const TaskSpec& spec) {
  validate(spec);
  const int s = spec.s;
  const int d = spec.d;
  RealMatrix phi = RealMatrix::Zero(s * d, s * d);
  for (int i = 0; i + 1 < s; ++i) phi.block(i * d, (i + 1) * d, d, d).setIdentity();
  // Block j holds the input with lag s - j + 1 (1-based), so C_k sits under
  // block column s - k + 1.
  for (int k = 1; k <= s; ++k) {
    const int col_block = s - k;  // 0-based
    phi.block((s - 1) * d, col_block * d, d, d) += spec.comp[static_cast<std::size_t>(k - 1)];
  }
  return phi;
}

CircuitRnn build_circuit_rnn(const TaskSpec& spec, int hidden, Embedding embedding, Rng& rng) {
  validate(spec);
  const int n = spec.s * spec.d;
  if (hidden < n) {
    throw InvalidArgument("build_circuit_rnn: hidden size " + std::to_string(hidden) + " is smaller than s*d = " +
                          std::to_string(n));
  }
  CircuitBlueprint bp;
  bp.spec = spec;
  bp.n_vars = spec.s;
  bp.d = spec.d;
  bp.embedding = embedding;
  bp.phi = build_phi(spec);
  if (embedding == Embedding::standard) {
    bp.psi = RealMatrix::Identity(hidden, n);
  } else {
    const RealMatrix left = random_orthogonal(hidden, rng).leftCols(n);
    const RealMatrix right = random_orthogonal(n, rng);
    std::uniform_real_distribution<double> spread(1.0, 10.0);
    RealVector sigma(n);
    for (int i = 0; i < n; ++i) sigma(i) = spread(rng);
    bp.psi = left * sigma.asDiagonal() * right.transpose();
  }
  bp.psi_dual = pinv(bp.psi);
  bp.w_uh = bp.block(spec.s);
  bp.w_r = bp.psi_dual.middleRows((spec.s - 1) * spec.d, spec.d);

  RnnParams p = zero_params(hidden, spec.d, Activation::identity);
  p.w_hh = bp.psi * bp.phi * bp.psi_dual;
  p.w_uh = bp.w_uh;
  p.w_r = bp.w_r;
  return {std::move(p), std::move(bp)};
}

RealMatrix input_phase_gate(const CircuitBlueprint& bp, int t) {
  if (t < 1) throw InvalidArgument("input_phase_gate: t must be >= 1");
  RealMatrix phi = bp.phi;
  if (t <= bp.n_vars && bp.spec.reads_recent_lags()) {
    phi.bottomRows(bp.d).setZero();
  }
  return phi;
}

Trajectory simulate_circuit(const CircuitRnn& c, const RealMatrix& inputs, int horizon) {
  const auto& bp = c.blueprint;
  const auto& p = c.params;
  validate(p);
  if (inputs.rows() != bp.n_vars || inputs.cols() != bp.d) {
    throw InvalidArgument("simulate_circuit: inputs must be s x d");
  }
  if (horizon < 0) throw InvalidArgument("simulate_circuit: negative horizon");
  const int total = bp.n_vars + horizon;
  const RealMatrix gated = bp.psi * input_phase_gate(bp, 1) * bp.psi_dual;
  Trajectory traj{RealMatrix(total, p.hidden()), RealMatrix(total, p.dim())};
  RealVector h = RealVector::Zero(p.hidden());
  for (int t = 1; t <= total; ++t) {
    const RealMatrix& w = t <= bp.n_vars ? gated : p.w_hh;
    RealVector next = w * h;
    if (t <= bp.n_vars) next += p.w_uh * inputs.row(t - 1).transpose();
    h = std::move(next);
    traj.hidden.row(t - 1) = h.transpose();
    traj.outputs.row(t - 1) = (p.w_r * h).transpose();
  }
  return traj;
}

nlohmann::json blueprint_to_json(const CircuitBlueprint& b) {
  nlohmann::json j = {
      {"task", task_to_json(b.spec)},
      {"n_vars", b.n_vars},
      {"d", b.d},
      {"embedding", to_string(b.embedding)},
      {"phi", matrix_to_json(b.phi)},
      {"psi", matrix_to_json(b.psi)},
  };
  if (!b.mask.empty()) j["mask"] = b.mask;
  return j;
}

CircuitBlueprint blueprint_from_json(const nlohmann::json& j) {
  CircuitBlueprint b;
  try {
    b.spec = task_from_json(j.at("task"));
    b.n_vars = j.at("n_vars").get<int>();
    b.d = j.at("d").get<int>();
    b.embedding = parse_embedding(j.at("embedding").get<std::string>());
    b.phi = matrix_from_json(j.at("phi"));
    b.psi = matrix_from_json(j.at("psi"));
    if (j.contains("mask")) b.mask = j.at("mask").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("blueprint: ") + e.what());
  }
  if (b.n_vars != b.spec.s || b.d != b.spec.d || b.phi.rows() != b.n_vars * b.d || b.psi.cols() != b.phi.rows()) {
    throw FormatError("blueprint: inconsistent dimensions");
  }
  b.psi_dual = pinv(b.psi);
  b.w_uh = b.block(b.n_vars);
  b.w_r = b.psi_dual.middleRows((b.n_vars - 1) * b.d, b.d);
  return b;
}

}  // namespace emt
