// SPDX-License-Identifier: Apache-2.0
//
// The variable-binding circuit: the interaction operator Phi over s variable
// memories of dimension d, its embedding into an RNN hidden space, the
// sequential-memory (GSEMM) discretisation and its conjugacy with the RNN
// update, and the rank-preserving basis mask.
//
// Conventions: variable memory i (1-based) occupies memory coordinates
// (i-1)*d .. i*d-1. Phi acts on column vectors, h(t+1) = Phi h(t) in the
// memory basis; block i receives block i+1 and block s receives f of all
// stored variables. Inputs are written into block s and the readout reads
// block s.
#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "emt/error.hpp"
#include "emt/numerics.hpp"
#include "emt/rnn.hpp"
#include "emt/tasks.hpp"

namespace emt {

enum class Embedding { standard, random };

std::string to_string(Embedding e);
Embedding parse_embedding(const std::string& s);

struct CircuitBlueprint {
  TaskSpec spec;
  int n_vars = 0;      // s
  int d = 0;           // block dimension
  RealMatrix phi;      // (s*d) x (s*d)
  RealMatrix psi;      // N_h x (s*d), blocks Psi_1 ... Psi_s
  RealMatrix psi_dual; // (s*d) x N_h, pseudoinverse of psi
  RealMatrix w_r;      // d x N_h
  RealMatrix w_uh;     // N_h x d
  Embedding embedding = Embedding::standard;
  std::vector<int> mask;  // optional optimised mask over memory coordinates

  /// Columns of variable memory `var` (1-based).
  RealMatrix block(int var) const { return psi.middleCols((var - 1) * d, d); }
};

/// Interaction operator for a task: block shift plus the composition rows.
RealMatrix build_phi(const TaskSpec& spec);

struct CircuitRnn {
  RnnParams params;  // identity activation
  CircuitBlueprint blueprint;
};

/// Linear RNN with W_hh = Psi Phi Psi^+, W_uh = Psi_s, W_r = (Psi^+)_s.
/// Random embeddings have condition number <= 10. Throws InvalidArgument when
/// hidden < s*d.
CircuitRnn build_circuit_rnn(const TaskSpec& spec, int hidden, Embedding embedding, Rng& rng);

/// Phi in effect at step t (1-based). During the input phase (t <= s) the
/// composition rows are zeroed when f reads a lag shorter than s; otherwise
/// Phi is returned unchanged.
RealMatrix input_phase_gate(const CircuitBlueprint& blueprint, int t);

/// Forward pass of the circuit RNN with the input-phase gate applied.
Trajectory simulate_circuit(const CircuitRnn& circuit, const RealMatrix& inputs, int horizon);

nlohmann::json blueprint_to_json(const CircuitBlueprint& b);
CircuitBlueprint blueprint_from_json(const nlohmann::json& j);

// Sequential episodic memory model ------------------------------------------

struct GsemmModel {
  RealMatrix xi;         // N_f x N_h, linearly independent columns
  RealMatrix phi_prime;  // N_h x N_h, with I + phi_prime^T = Phi^T
  Activation sigma_f = Activation::tanh;

  /// Xi (I + Phi'^T) Xi^+, the effective feature-space transition.
  RealMatrix transition() const;
};

struct GsemmState {
  RealVector v_f;  // N_f
  RealVector v_h;  // N_h, algebraic value at this step
  RealVector v_d;  // N_f, algebraic value at this step
};

/// Discrete forward-Euler dynamics with T_f = 1, T_h = T_d = 0. Returns
/// steps+1 states starting with v0.
std::vector<GsemmState> gsemm_simulate(const GsemmModel& model, const RealVector& v0, int steps);

struct ConjugacyReport {
  double max_deviation = 0.0;
  double operator_norm = 0.0;
  bool norm_condition_met = false;
};

/// Runs the memory model and the RNN form h(t) = sigma_f(Xi Phi^T Xi^+ h(t-1))
/// from h(0) = sigma_f(v0) and reports max_t ||h(t) - sigma_f(V_f(t))||_inf.
ConjugacyReport verify_conjugacy(const GsemmModel& model, const RealVector& v0, int steps);

/// Random model with ||Xi Phi^T Xi^+||_2 in [0.5, 1].
GsemmModel random_gsemm(int n_f, int n_h, Activation sigma_f, Rng& rng);

// Basis mask ----------------------------------------------------------------

struct MaskResult {
  std::vector<int> mask;          // 0/1 per memory coordinate
  std::vector<int> reachable;     // coordinates feeding the readout
  std::size_t rank_phi = 0;
  std::size_t rank_masked = 0;
  bool exhaustive = false;        // exhaustive search decided the result
};

/// Thrown when the reachability mask fails the rank check and the problem is
/// too large to search exhaustively.
class MaskVerificationError : public NumericalError {
 public:
  MaskVerificationError(const std::string& what, std::vector<int> mask)
      : NumericalError(what), mask_(std::move(mask)) {}
  const std::vector<int>& mask() const { return mask_; }

 private:
  std::vector<int> mask_;
};

inline constexpr int kExhaustiveMaskLimit = 12;

/// Minimum-cardinality diagonal mask M with rank(M^T Phi M) = rank(Phi).
/// Starts from readout reachability; exhaustive search guarantees the optimum
/// when the dimension is at most kExhaustiveMaskLimit.
MaskResult optimize_mask(const RealMatrix& phi, const std::vector<bool>& readout, double tol = -1.0);

/// Readout pattern of the circuit: the coordinates of variable memory s.
std::vector<bool> circuit_readout(int s, int d);

/// Rank of M^T Phi M for a 0/1 mask.
std::size_t masked_rank(const RealMatrix& phi, const std::vector<int>& mask, double tol = -1.0);

}  // namespace emt
