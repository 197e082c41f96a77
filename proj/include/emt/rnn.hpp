// SPDX-License-Identifier: Apache-2.0
//
// Elman RNN: h(t) = act(W_hh h(t-1) + W_uh u(t) + b), y(t) = W_r h(t),
// h(0) = 0. During the output phase the input is the zero vector.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emt/numerics.hpp"
#include "emt/tasks.hpp"

namespace emt {

enum class Activation { tanh, identity };
enum class InitScheme { uniform, gaussian };

std::string to_string(Activation a);
std::string to_string(InitScheme s);
Activation parse_activation(const std::string& s);
InitScheme parse_init_scheme(const std::string& s);

struct RnnParams {
  RealMatrix w_uh;  // N_h x d
  RealMatrix w_hh;  // N_h x N_h
  RealMatrix w_r;   // d x N_h
  RealVector bias;  // N_h, zero unless explicitly set
  Activation activation = Activation::tanh;

  int hidden() const { return static_cast<int>(w_hh.rows()); }
  int dim() const { return static_cast<int>(w_uh.cols()); }
};

/// Zero-initialised parameters of the given shape.
RnnParams zero_params(int hidden, int d, Activation activation = Activation::tanh);

/// Throws InvalidArgument on inconsistent shapes or non-finite weights.
void validate(const RnnParams& params);

/// Gradients, shaped like the parameters.
struct RnnGrads {
  RealMatrix w_uh;
  RealMatrix w_hh;
  RealMatrix w_r;
  RealVector bias;

  static RnnGrads zeros_like(const RnnParams& p);
  double squared_norm() const;
  void scale(double factor);
};

struct Trajectory {
  RealMatrix hidden;   // (s + horizon) x N_h, row t-1 holds h(t)
  RealMatrix outputs;  // (s + horizon) x d
};

/// Runs the input phase on `inputs` (s x d) and then `horizon` autonomous steps.
Trajectory forward(const RnnParams& params, const RealMatrix& inputs, int horizon);

struct LossResult {
  double loss = 0.0;
  RnnGrads grads;
  std::vector<double> loss_by_step;  // MSE per output-phase timestep
  double sign_accuracy = 1.0;        // over the evaluated output phase
};

/// Mean squared error over output-phase steps 1..horizon, components and
/// episodes, with exact BPTT gradients.
LossResult loss_and_grads(const RnnParams& params, const std::vector<Episode>& batch, int horizon);

struct Curriculum {
  int h0_horizon = 10;
  int h_max = 100;
  double gamma = 1.2;
  double epsilon = 3e-2;
};

struct TrainConfig {
  int hidden = 128;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int iterations = 45000;
  double weight_decay = 0.0;
  double grad_clip = 1.0;
  InitScheme init = InitScheme::uniform;
  Activation activation = Activation::tanh;
  Curriculum curriculum;
  std::uint64_t rng_seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double loss_ema_decay = 0.99;
  bool train_bias = false;
};

/// Throws InvalidArgument when the configuration is unusable.
void validate(const TrainConfig& config);

nlohmann::json config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct AdamState {
  RnnGrads m;
  RnnGrads v;
  long step = 0;

  static AdamState for_params(const RnnParams& p);
};

/// Rescales grads so their global L2 norm is at most max_norm (no-op when
/// max_norm <= 0). Returns the norm before clipping.
double clip_global_norm(RnnGrads& grads, double max_norm);

/// Clips, adds the L2 term and applies one bias-corrected Adam update.
void adam_step(AdamState& state, RnnParams& params, RnnGrads grads, const TrainConfig& config);

RnnParams init_params(int hidden, int d, InitScheme scheme, Rng& rng,
                      Activation activation = Activation::tanh);

struct TrainReport {
  RnnParams params;
  std::vector<double> loss;             // per iteration
  std::vector<int> horizon;             // H_n used at each iteration
  std::vector<double> accuracy;         // batch sign accuracy per iteration
  std::vector<double> loss_by_timestep; // final rolling L(t), t = 1..h_max (NaN if never seen)
  double wall_seconds = 0.0;
};

struct TrainHooks {
  int save_every = 0;
  std::function<void(int iteration, const RnnParams&)> on_checkpoint;
  /// Called after every iteration; return true to stop early.
  std::function<bool(int iteration, const RnnParams&)> should_stop;
};

/// Adam training with the adaptive curriculum horizon. Deterministic for a
/// fixed (spec, config). Throws NumericalError on a non-finite loss.
TrainReport train(const TaskSpec& spec, const TrainConfig& config, const TrainHooks& hooks = {});

/// Sign-match accuracy over `horizon` output steps of n_episodes random episodes.
double accuracy(const RnnParams& params, const TaskSpec& spec, int horizon, int n_episodes, Rng& rng);

/// CSV: iteration,loss,horizon,accuracy
void write_report_csv(std::ostream& os, const TrainReport& report);

// Checkpoints -----------------------------------------------------------------

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointMeta {
  std::string init_scheme = "none";
  std::uint64_t rng_seed = 0;
  nlohmann::json training_meta = nlohmann::json::object();
  nlohmann::json blueprint;  // null unless the weights come from a constructed circuit
};

struct Checkpoint {
  RnnParams params;
  CheckpointMeta meta;
};

nlohmann::json checkpoint_to_json(const RnnParams& params, const CheckpointMeta& meta);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const RnnParams& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

struct ExpectedDims {
  int hidden;  // negative accepts any hidden size
  int d;
};

/// Throws FormatError for malformed/truncated files and version mismatches,
/// and when `expected` is given and the stored shape differs.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<ExpectedDims> expected = std::nullopt);

nlohmann::json matrix_to_json(const RealMatrix& m);
RealMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace emt
