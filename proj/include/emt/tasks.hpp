// SPDX-License-Identifier: Apache-2.0
//
// Variable-binding tasks: s input vectors in {-1,1}^d followed by an
// autonomous output phase where u(t) = sum_k C_k u(t-k).
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "emt/numerics.hpp"

namespace emt {

using Rng = std::mt19937_64;

/// A linear composition map over the last s inputs. Stacking
/// [C_1 | ... | C_s] gives a d x (s*d) matrix in which every row holds exactly
/// one nonzero entry, equal to +1 or -1.
struct TaskSpec {
  std::string name;
  int s = 1;
  int d = 1;
  std::vector<RealMatrix> comp;  // comp[k-1] = C_k

  /// One row of the stacked composition map.
  struct Selection {
    int lag;        // 1..s
    int component;  // 0..d-1
    double sign;    // +1 or -1
  };
  /// Selection read by output component `row`.
  Selection selection(int row) const;
  /// True when some row reads a lag shorter than s.
  bool reads_recent_lags() const;
};

/// Throws InvalidArgument when the signed-selection invariant is violated.
void validate(const TaskSpec& spec);

struct Episode {
  RealMatrix inputs;   // s x d
  RealMatrix targets;  // horizon x d, rows are t = s+1 ... s+horizon
};

TaskSpec make_repeat_copy(int s, int d);

/// Random signed selection; the selected lags cover min(s, d) distinct values.
TaskSpec make_compose_copy(int s, int d, std::uint64_t seed);

/// Unrolls the task recurrence. Inputs must be s x d with entries in {-1,1}.
Episode evolve_oracle(const TaskSpec& spec, const RealMatrix& inputs, int horizon);

/// Inputs drawn i.i.d. uniform over {-1,1}^d.
RealMatrix sample_inputs(const TaskSpec& spec, Rng& rng);
std::vector<Episode> sample_batch(const TaskSpec& spec, int batch_size, int horizon, Rng& rng);

/// Fraction of entries where sign(output) == target, with sign(0) = +1.
double sign_match_fraction(const RealMatrix& outputs, const RealMatrix& targets);

nlohmann::json task_to_json(const TaskSpec& spec);
TaskSpec task_from_json(const nlohmann::json& j);
void save_task(const TaskSpec& spec, const std::filesystem::path& path);
TaskSpec load_task(const std::filesystem::path& path);

/// CSV with header `t,phase,u1..ud`; one row per timestep. Input-phase rows
/// are written only when include_inputs is set.
void write_episode_csv(std::ostream& os, const Episode& episode, bool include_inputs);

}  // namespace emt
