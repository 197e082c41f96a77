// SPDX-License-Identifier: Apache-2.0
//
// Mechanistic analysis of trained RNNs: fixed points and linearisation,
// variable-memory bases, the learned interaction operator, spectrum
// comparison against the circuit, and hidden-state projections.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emt/circuit.hpp"
#include "emt/numerics.hpp"
#include "emt/rnn.hpp"

namespace emt {

struct FixedPoint {
  RealVector h;
  double residual = 0.0;  // ||act(W_hh h + b) - h||_inf
  int iterations = 0;
};

/// Damped Newton on act(W_hh h + b) = h. Throws NumericalError when the
/// iteration budget is exhausted without reaching tol.
FixedPoint find_fixed_point(const RnnParams& p, const RealVector& start, double tol = 1e-12, int max_iter = 200);

struct LinearizedRnn {
  RealVector fixed_point;
  RealVector jacobian_diag;  // act'(pre-activation at the fixed point)
  RealMatrix a;              // diag(jacobian_diag) W_hh
  RealMatrix b_in;           // diag(jacobian_diag) W_uh
};

/// First-order expansion of the update around h_star.
LinearizedRnn linearize(const RnnParams& p, const RealVector& h_star);

enum class Propagation {
  forward,    // Psi_k = W_hh^(s-k) Psi_s
  transpose,  // Psi_k = (W_hh^T)^k pinv(W_r)
};

struct MemoryOptions {
  int s = 0;
  double alpha = 0.0;               // weight of W_uh in Psi_s
  double transient_threshold = 0.97;
  Propagation propagation = Propagation::forward;
  int probe_episodes = 64;
  int probe_horizon = -1;           // -1 selects 2s
  double var_threshold = 0.99;
  std::uint64_t probe_seed = 0;
};

struct VariableMemoryBasis {
  int s = 0;
  int d = 0;
  RealMatrix psi;         // N_h x (s*d)
  RealMatrix dual;        // pinv(psi)
  RealMatrix complement;  // N_h x k orthonormal, possibly k = 0
  double alpha = 0.0;
  double transient_threshold = 0.97;
  double condition = 0.0;
  bool well_conditioned = true;
  bool transients_removed = true;

  RealMatrix block(int var) const { return psi.middleCols((var - 1) * d, d); }
};

/// Basis built from an explicit Psi (for example a circuit blueprint).
VariableMemoryBasis make_basis(const RealMatrix& psi, int s, int d);

/// Variable memories of a linear(ised) RNN. Uses `lin` when given, otherwise
/// linearises at the fixed point reached from the origin. The complement is
/// the PCA of probe residuals outside the span of Psi.
VariableMemoryBasis compute_variable_memories(const RnnParams& p, const MemoryOptions& opts,
                                              const LinearizedRnn* lin = nullptr);

struct Interaction {
  RealMatrix phi_learned;  // Psi^+ W_hh Psi
  RealMatrix cross_in;     // Psi^+ W_hh Psi_perp
  RealMatrix cross_out;    // Psi_perp^T W_hh Psi
  double off_circuit_ratio = 0.0;  // ||W_hh - Psi Phi Psi^+||_F / ||W_hh||_F
};

Interaction extract_interaction(const VariableMemoryBasis& basis, const RealMatrix& w_hh);

struct SpectrumReport {
  double magnitude_threshold = 0.97;
  std::vector<double> theoretical_args;  // sorted ascending
  std::vector<double> learned_args;      // sorted ascending
  std::vector<double> learned_magnitudes;
  std::vector<std::pair<double, double>> pairs;
  std::optional<double> mae;             // absent when counts differ
  std::string pairing = "sorted-argument, best cyclic rotation";
  std::vector<double> centers;           // distinct theoretical arguments
  std::vector<int> theoretical_counts;   // per center
  std::vector<int> learned_counts;       // nearest center
};

/// Compares the arguments of the nonzero eigenvalues of phi with those of
/// the eigenvalues of w with |lambda| >= magnitude_threshold. Both lists are
/// sorted by argument and paired in order, allowing a cyclic rotation so a
/// pair straddling -pi/pi is not split; the rotation with least error wins.
SpectrumReport spectrum_mae(const RealMatrix& phi, const RealMatrix& w, double magnitude_threshold = 0.97);

nlohmann::json spectrum_to_json(const SpectrumReport& r);

/// Variable-memory coordinates Psi^+ h(t) of each hidden row, returned as
/// (s*d) x T. With `normalize`, each block is scaled to unit standard
/// deviation over time; blocks with zero deviation are left alone.
RealMatrix project_hidden(const VariableMemoryBasis& basis, const RealMatrix& hidden, bool normalize);

struct ClusterReport {
  int s = 0;
  double magnitude_threshold = 0.97;
  double angle_tolerance = 0.0;
  int near_circle = 0;          // eigenvalues with |lambda| >= threshold
  std::vector<int> counts;      // per center 2*pi*k/s, k = 0..s-1
  int unclustered = 0;          // near-circle eigenvalues off every center
};

/// Groups eigenvalues of w near the unit circle around the s-th roots of unity.
ClusterReport eig_cluster_report(const RealMatrix& w, int s, double magnitude_threshold, double angle_tolerance);

nlohmann::json clusters_to_json(const ClusterReport& r);

}  // namespace emt
