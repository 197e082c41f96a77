// SPDX-License-Identifier: Apache-2.0
#include "emt/circuit.hpp"

#include <random>

namespace emt {

namespace {

RealVector apply(Activation a, const RealVector& x) {
  if (a == Activation::identity) return x;
  return x.array().tanh().matrix();
}

void check_model(const GsemmModel& m) {
  if (m.xi.rows() < m.xi.cols() || m.xi.cols() == 0) {
    throw InvalidArgument("gsemm: xi must be N_f x N_h with N_f >= N_h > 0");
  }
  if (m.phi_prime.rows() != m.xi.cols() || m.phi_prime.cols() != m.xi.cols()) {
    throw InvalidArgument("gsemm: phi_prime must be N_h x N_h");
  }
  if (numerical_rank(m.xi) != static_cast<std::size_t>(m.xi.cols())) {
    throw InvalidArgument("gsemm: xi columns must be linearly independent");
  }
}

}  // namespace

RealMatrix GsemmModel::transition() const {
  const Eigen::Index n = xi.cols();
  const RealMatrix phi_t = RealMatrix::Identity(n, n) + phi_prime.transpose();
  return xi * phi_t * pinv(xi);
}

std::vector<GsemmState> gsemm_simulate(const GsemmModel& model, const RealVector& v0, int steps) {
  check_model(model);
  if (v0.size() != model.xi.rows()) throw InvalidArgument("gsemm_simulate: v0 must have N_f entries");
  if (steps < 0) throw InvalidArgument("gsemm_simulate: negative step count");
  const RealMatrix xi_dual = pinv(model.xi);
  const RealMatrix phi_pt = model.phi_prime.transpose();
  std::vector<GsemmState> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  RealVector v_f = v0;
  for (int t = 0; t <= steps; ++t) {
    RealVector v_d = apply(model.sigma_f, v_f);
    const RealVector proj = xi_dual * v_d;
    RealVector v_h = proj + phi_pt * proj;
    out.push_back({v_f, v_h, v_d});
    // Euler step with T_f = 1: V_f <- V_f + (Xi V_h - V_f).
    v_f = model.xi * v_h;
  }
  return out;
}

ConjugacyReport verify_conjugacy(const GsemmModel& model, const RealVector& v0, int steps) {
  const auto states = gsemm_simulate(model, v0, steps);
  const RealMatrix w = model.transition();
  ConjugacyReport r;
  r.operator_norm = operator_norm(w);
  r.norm_condition_met = r.operator_norm <= 1.0 + 1e-12;
  RealVector h = apply(model.sigma_f, v0);
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (t > 0) h = apply(model.sigma_f, w * h);
    const RealVector expected = apply(model.sigma_f, states[t].v_f);
    r.max_deviation = std::max(r.max_deviation, (h - expected).lpNorm<Eigen::Infinity>());
  }
  return r;
}

GsemmModel random_gsemm(int n_f, int n_h, Activation sigma_f, Rng& rng) {
  if (n_h < 1 || n_f < n_h) throw InvalidArgument("random_gsemm: need n_f >= n_h >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> target(0.5, 1.0);
  GsemmModel m;
  m.sigma_f = sigma_f;
  m.xi.resize(n_f, n_h);
  do {
    for (Eigen::Index i = 0; i < m.xi.size(); ++i) m.xi.data()[i] = normal(rng);
  } while (numerical_rank(m.xi) != static_cast<std::size_t>(n_h));
  RealMatrix phi_t(n_h, n_h);
  for (Eigen::Index i = 0; i < phi_t.size(); ++i) phi_t.data()[i] = normal(rng);
  const double norm = operator_norm(m.xi * phi_t * pinv(m.xi));
  if (norm > 0.0) phi_t *= target(rng) / norm;
  m.phi_prime = phi_t.transpose() - RealMatrix::Identity(n_h, n_h);
  return m;
}

}  // namespace emt
