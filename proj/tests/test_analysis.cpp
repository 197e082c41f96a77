// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emt/analysis.hpp"
#include "emt/error.hpp"
#include "test_support.hpp"

using namespace emt;

namespace {

// Largest principal angle between two column spans, via orthonormal bases.
double max_principal_angle(const RealMatrix& a, const RealMatrix& b) {
  const RealMatrix qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                        RealMatrix::Identity(a.rows(), a.cols());
  const RealMatrix qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                        RealMatrix::Identity(b.rows(), b.cols());
  const RealVector cosines = Eigen::JacobiSVD<Eigen::MatrixXd>(qa.transpose() * qb).singularValues();
  return std::acos(std::min(1.0, cosines.minCoeff()));
}

RnnParams linear_params(const RealMatrix& w_hh, const RealMatrix& w_uh, const RealMatrix& w_r) {
  RnnParams p = zero_params(static_cast<int>(w_hh.rows()), static_cast<int>(w_uh.cols()), Activation::identity);
  p.w_hh = w_hh;
  p.w_uh = w_uh;
  p.w_r = w_r;
  return p;
}

}  // namespace

TEST_CASE("fixed point: examples") {
  RnnParams zero = zero_params(3, 1);
  const FixedPoint f0 = find_fixed_point(zero, RealVector::Zero(3));
  CHECK(f0.h.isZero());
  CHECK(f0.iterations == 0);

  // Identity activation: h = (I - W)^-1 b by Cramer's rule.
  RnnParams lin = zero_params(2, 1, Activation::identity);
  lin.w_hh << 0.2, 0.3, -0.1, 0.4;
  lin.bias << 1.0, -2.0;
  const double a = 1 - 0.2, b = -0.3, c = 0.1, d = 1 - 0.4;
  const double det = a * d - b * c;
  const RealVector expected{{(1.0 * d - b * -2.0) / det, (a * -2.0 - c * 1.0) / det}};
  CHECK((find_fixed_point(lin, RealVector::Zero(2)).h - expected).norm() < 1e-12);

  // No fixed point exists for h = h + 1.
  RnnParams drift = zero_params(1, 1, Activation::identity);
  drift.w_hh(0, 0) = 1.0;
  drift.bias(0) = 1.0;
  CHECK_THROWS_AS(find_fixed_point(drift, RealVector::Zero(1)), NumericalError);
}

TEST_CASE("fixed point: tanh with bias matches long forward iteration") {
  RnnParams p = zero_params(2, 1);
  p.w_hh << 0.5, -0.2, 0.1, 0.3;
  p.bias << 0.4, -0.7;
  RealVector h = RealVector::Zero(2);
  for (int i = 0; i < 1000000; ++i) h = (p.w_hh * h + p.bias).array().tanh().matrix();
  const FixedPoint fp = find_fixed_point(p, RealVector::Zero(2));
  CHECK((fp.h - h).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(fp.residual <= 1e-12);
}

TEST_CASE("linearize: examples and consistency") {
  Rng rng(1);
  RnnParams p = init_params(6, 2, InitScheme::gaussian, rng);
  const LinearizedRnn at_zero = linearize(p, RealVector::Zero(6));
  CHECK((at_zero.a - p.w_hh).norm() < 1e-15);
  CHECK((at_zero.b_in - p.w_uh).norm() < 1e-15);

  RnnParams sat = p;
  sat.bias = RealVector::Constant(6, 40.0);
  const LinearizedRnn s = linearize(sat, RealVector::Zero(6));
  CHECK(s.a.cwiseAbs().maxCoeff() < 1e-12);

  p.bias = test::random_matrix(6, 1, rng).col(0) * 0.3;
  const FixedPoint fp = find_fixed_point(p, RealVector::Zero(6));
  const LinearizedRnn l = linearize(p, fp.h);
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const RealVector delta = RealVector::Constant(6, eps);
    const RealVector next = (p.w_hh * (fp.h + delta) + p.bias).array().tanh().matrix();
    CHECK((next - fp.h - l.a * delta).norm() <= 10.0 * eps * eps);
  }
}

TEST_CASE("memories: circuit basis recovered across weightings") {
  Rng rng(2);
  for (Embedding emb : {Embedding::standard, Embedding::random}) {
    const CircuitRnn c = build_circuit_rnn(make_repeat_copy(4, 2), 12, emb, rng);
    for (double alpha : {0.0, 0.5, 1.0}) {
      MemoryOptions opts;
      opts.s = 4;
      opts.alpha = alpha;
      const VariableMemoryBasis b = compute_variable_memories(c.params, opts);
      CAPTURE(alpha);
      CHECK(b.well_conditioned);
      CHECK(b.complement.cols() == 0);
      CHECK(max_principal_angle(b.psi, c.blueprint.psi) <= 1e-6);
      // pinv(W_r) mixes blocks unless psi is orthonormal.
      if (emb == Embedding::standard || alpha == 1.0) {
        for (int k = 1; k <= 4; ++k) CHECK(max_principal_angle(b.block(k), c.blueprint.block(k)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("memories: transient directions are removed") {
  Rng rng(3);
  const RealMatrix v = test::random_matrix(3, 3, rng) + 3.0 * RealMatrix::Identity(3, 3);
  const RealMatrix v_inv = v.inverse();
  RealVector lambda{{1.0, -1.0, 0.3}};
  const RealMatrix w = v * lambda.asDiagonal() * v_inv;
  const RnnParams p = linear_params(w, test::random_matrix(3, 1, rng), test::random_matrix(1, 3, rng));
  MemoryOptions opts;
  opts.s = 2;
  opts.alpha = 0.5;
  const VariableMemoryBasis b = compute_variable_memories(p, opts);
  CHECK(b.transients_removed);
  CHECK((v_inv * b.psi).row(2).cwiseAbs().maxCoeff() < 1e-10);

  const RnnParams decay = linear_params(0.5 * RealMatrix::Identity(3, 3), p.w_uh, p.w_r);
  const VariableMemoryBasis gone = compute_variable_memories(decay, opts);
  CHECK_FALSE(gone.well_conditioned);
}

TEST_CASE("memories: transpose propagation and argument checks") {
  Rng rng(4);
  const CircuitRnn c = build_circuit_rnn(make_repeat_copy(3, 1), 3, Embedding::standard, rng);
  MemoryOptions opts;
  opts.s = 3;
  opts.propagation = Propagation::transpose;
  const VariableMemoryBasis b = compute_variable_memories(c.params, opts);
  // (W^T)^k e_3 for the cyclic shift.
  const RealMatrix wt = c.params.w_hh.transpose();
  RealMatrix expected(3, 3);
  expected.col(0) = wt * RealVector::Unit(3, 2);
  expected.col(1) = wt * wt * RealVector::Unit(3, 2);
  expected.col(2) = wt * wt * wt * RealVector::Unit(3, 2);
  CHECK((b.psi - expected).norm() < 1e-12);

  opts.alpha = 2.0;
  CHECK_THROWS_AS(compute_variable_memories(c.params, opts), InvalidArgument);
  opts.alpha = 0.0;
  opts.s = 0;
  CHECK_THROWS_AS(compute_variable_memories(c.params, opts), InvalidArgument);
}

TEST_CASE("interaction: round trip and zero weights") {
  Rng rng(5);
  const RealMatrix psi = test::random_matrix(7, 4, rng);
  const RealMatrix phi = test::random_matrix(4, 4, rng);
  const VariableMemoryBasis b = make_basis(psi, 2, 2);
  const RealMatrix w = psi * phi * pinv(psi);
  const Interaction it = extract_interaction(b, w);
  CHECK((it.phi_learned - phi).norm() < 1e-10);
  CHECK(it.off_circuit_ratio < 1e-10);

  const Interaction z = extract_interaction(b, RealMatrix::Zero(7, 7));
  CHECK(z.phi_learned.isZero());
  CHECK(z.off_circuit_ratio == 0.0);

  const RealMatrix w2 = w + RealMatrix::Identity(7, 7);
  CHECK(extract_interaction(b, w2).off_circuit_ratio > 0.1);
  CHECK_THROWS_AS(extract_interaction(b, RealMatrix::Zero(6, 6)), InvalidArgument);
}

TEST_CASE("spectrum_mae: examples") {
  Rng rng(6);
  const RealMatrix phi = build_phi(make_repeat_copy(4, 1));
  const RealMatrix s = test::random_matrix(4, 4, rng) + 4.0 * RealMatrix::Identity(4, 4);
  const SpectrumReport similar = spectrum_mae(phi, s * phi * s.inverse());
  REQUIRE(similar.mae);
  CHECK(*similar.mae < 1e-9);
  CHECK(similar.pairs.size() == 4);

  RealMatrix rot(2, 2);
  rot << std::cos(0.1), -std::sin(0.1), std::sin(0.1), std::cos(0.1);
  const SpectrumReport r = spectrum_mae(RealMatrix::Identity(2, 2), rot);
  REQUIRE(r.mae);
  CHECK(*r.mae == doctest::Approx(0.1).epsilon(1e-12));

  // Straddling -pi/pi costs only the short way round.
  RealMatrix rot_pi(2, 2);
  const double th = std::numbers::pi - 0.05;
  rot_pi << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  RealMatrix phi2 = RealMatrix::Zero(2, 2);
  phi2(0, 0) = -1.0;
  phi2(1, 1) = -1.0;
  const SpectrumReport wrap = spectrum_mae(phi2, rot_pi);
  REQUIRE(wrap.mae);
  CHECK(*wrap.mae == doctest::Approx(0.05).epsilon(1e-9));

  const SpectrumReport missing = spectrum_mae(phi, 0.5 * RealMatrix::Identity(4, 4));
  CHECK_FALSE(missing.mae);
  CHECK(spectrum_to_json(missing)["indeterminate"] == true);
  CHECK(missing.theoretical_counts == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("spectrum_mae: nilpotent part of phi is ignored") {
  TaskSpec t{"lag2", 2, 1, {RealMatrix::Zero(1, 1), RealMatrix::Constant(1, 1, 1.0)}};
  // f reads lag 2 only; phi is the 2-cycle.
  const SpectrumReport r = spectrum_mae(build_phi(t), build_phi(t));
  REQUIRE(r.mae);
  CHECK(*r.mae < 1e-12);
  TaskSpec t1{"lag1", 2, 1, {RealMatrix::Constant(1, 1, 1.0), RealMatrix::Zero(1, 1)}};
  const SpectrumReport r1 = spectrum_mae(build_phi(t1), RealMatrix::Identity(1, 1));
  REQUIRE(r1.mae);
  CHECK(r1.theoretical_args.size() == 1);
  CHECK(*r1.mae < 1e-12);
}

TEST_CASE("project_hidden: reconstruction and zero-variance guard") {
  Rng rng(7);
  const RealMatrix psi = test::random_matrix(9, 6, rng);
  const VariableMemoryBasis b = make_basis(psi, 3, 2);
  RealMatrix coords = test::random_matrix(6, 25, rng);
  CHECK((project_hidden(b, (psi * coords).transpose(), false) - coords).norm() < 1e-10);

  coords.middleRows(2, 2).setZero();
  const RealMatrix n = project_hidden(b, (psi * coords).transpose(), true);
  CHECK(n.allFinite());
  CHECK(n.middleRows(2, 2).cwiseAbs().maxCoeff() < 1e-10);
  const auto blk = n.middleRows(0, 2);
  const double mean = blk.mean();
  CHECK(std::sqrt((blk.array() - mean).square().mean()) == doctest::Approx(1.0));
  CHECK_THROWS_AS(project_hidden(b, RealMatrix::Zero(4, 8), false), InvalidArgument);
}

TEST_CASE("clusters: roots of unity and identity") {
  const ClusterReport r = eig_cluster_report(build_phi(make_repeat_copy(8, 4)), 8, 0.97, 0.15);
  CHECK(r.near_circle == 32);
  CHECK(r.counts == std::vector<int>(8, 4));
  CHECK(r.unclustered == 0);

  const ClusterReport id = eig_cluster_report(RealMatrix::Identity(3, 3), 4, 0.97, 0.15);
  CHECK(id.counts == std::vector<int>{3, 0, 0, 0});

  RealMatrix off(2, 2);
  off << std::cos(0.4), -std::sin(0.4), std::sin(0.4), std::cos(0.4);
  const ClusterReport o = eig_cluster_report(off, 2, 0.97, 0.15);
  CHECK(o.unclustered == 2);
  CHECK(clusters_to_json(o)["unclustered"] == 2);
}
