// SPDX-License-Identifier: Apache-2.0
#include "emt/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "emt/error.hpp"
#include "emt/kernels.hpp"

namespace emt {

namespace {

// Episodes per gradient chunk. Chunk boundaries do not depend on the thread
// count, so the reduction order (and the result) is the same for any count.
constexpr int kChunk = 16;

// EMT_THREADS overrides the hardware thread count.
int worker_count() {
  if (const char* env = std::getenv("EMT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return std::min(n, 256);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void activate(Activation act, double* z, std::size_t n) {
  if (act == Activation::tanh) {
    for (std::size_t i = 0; i < n; ++i) z[i] = std::tanh(z[i]);
  }
}

// Batched forward pass. hs[t] is B x N holding h(t), t = 0..T; ys[t-1] is
// B x d holding y(t). Only steps whose outputs are needed get a readout.
struct BatchPass {
  std::vector<RealMatrix> hs;
  std::vector<RealMatrix> ys;
};

// inputs[t] is B x d for t < s.
BatchPass run_batch(const RnnParams& p, const std::vector<RealMatrix>& inputs, std::size_t batch,
                    int horizon, bool all_outputs) {
  const auto& k = kernels::active();
  const int s = static_cast<int>(inputs.size());
  const int total = s + horizon;
  const auto n = static_cast<std::size_t>(p.hidden());
  const auto d = static_cast<std::size_t>(p.dim());
  const bool has_bias = !p.bias.isZero(0.0);

  BatchPass out;
  out.hs.reserve(static_cast<std::size_t>(total) + 1);
  out.hs.emplace_back(RealMatrix::Zero(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(n)));
  out.ys.resize(static_cast<std::size_t>(total));
  for (int t = 1; t <= total; ++t) {
    RealMatrix h(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(n));
    k.gemm_nt(out.hs.back().data(), p.w_hh.data(), h.data(), batch, n, n, false);
    if (t <= s) k.gemm_nt(inputs[static_cast<std::size_t>(t - 1)].data(), p.w_uh.data(), h.data(), batch, n, d, true);
    if (has_bias) h.rowwise() += p.bias.transpose();
    activate(p.activation, h.data(), static_cast<std::size_t>(h.size()));
    if (all_outputs || t > s) {
      RealMatrix y(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(d));
      k.gemm_nt(h.data(), p.w_r.data(), y.data(), batch, d, n, false);
      out.ys[static_cast<std::size_t>(t - 1)] = std::move(y);
    }
    out.hs.push_back(std::move(h));
  }
  return out;
}

// Inputs of episodes [first, last) arranged per timestep.
std::vector<RealMatrix> stack_inputs(const std::vector<Episode>& batch, std::size_t first, std::size_t last,
                                     int s, int d) {
  std::vector<RealMatrix> inputs(static_cast<std::size_t>(s),
                                 RealMatrix(static_cast<Eigen::Index>(last - first), d));
  for (std::size_t b = first; b < last; ++b) {
    for (int t = 0; t < s; ++t) inputs[static_cast<std::size_t>(t)].row(static_cast<Eigen::Index>(b - first)) = batch[b].inputs.row(t);
  }
  return inputs;
}

struct ChunkResult {
  double sse = 0.0;
  std::vector<double> sse_by_step;
  long hits = 0;
  RnnGrads grads;
};

ChunkResult chunk_loss_and_grads(const RnnParams& p, const std::vector<Episode>& batch, std::size_t first,
                                 std::size_t last, int horizon, double grad_scale) {
  const auto& k = kernels::active();
  const int s = static_cast<int>(batch.front().inputs.rows());
  const int d = p.dim();
  const auto n = static_cast<std::size_t>(p.hidden());
  const auto rows = last - first;
  const auto inputs = stack_inputs(batch, first, last, s, d);
  const BatchPass pass = run_batch(p, inputs, rows, horizon, false);

  ChunkResult r;
  r.sse_by_step.assign(static_cast<std::size_t>(horizon), 0.0);
  r.grads = RnnGrads::zeros_like(p);

  RealMatrix dh_next = RealMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  RealMatrix dz(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  RealMatrix dy(static_cast<Eigen::Index>(rows), d);
  for (int t = s + horizon; t >= 1; --t) {
    const RealMatrix& h = pass.hs[static_cast<std::size_t>(t)];
    RealMatrix& dh = dh_next;
    if (t > s) {
      const int step = t - s;
      const RealMatrix& y = pass.ys[static_cast<std::size_t>(t - 1)];
      double sse = 0.0;
      for (std::size_t b = 0; b < rows; ++b) {
        const auto& target = batch[first + b].targets;
        for (int j = 0; j < d; ++j) {
          const double out = y(static_cast<Eigen::Index>(b), j);
          const double tgt = target(step - 1, j);
          const double diff = out - tgt;
          sse += diff * diff;
          dy(static_cast<Eigen::Index>(b), j) = 2.0 * grad_scale * diff;
          if ((out >= 0.0 ? 1.0 : -1.0) == tgt) ++r.hits;
        }
      }
      r.sse += sse;
      r.sse_by_step[static_cast<std::size_t>(step - 1)] = sse;
      k.gemm_tn_acc(dy.data(), h.data(), r.grads.w_r.data(), static_cast<std::size_t>(d), n, rows);
      k.gemm_nn_acc(dy.data(), p.w_r.data(), dh.data(), rows, n, static_cast<std::size_t>(d));
    }
    if (p.activation == Activation::tanh) {
      k.tanh_backward(h.data(), dh.data(), dz.data(), static_cast<std::size_t>(dz.size()));
    } else {
      dz = dh;
    }
    k.gemm_tn_acc(dz.data(), pass.hs[static_cast<std::size_t>(t - 1)].data(), r.grads.w_hh.data(), n, n, rows);
    if (t <= s) {
      k.gemm_tn_acc(dz.data(), inputs[static_cast<std::size_t>(t - 1)].data(), r.grads.w_uh.data(), n,
                    static_cast<std::size_t>(d), rows);
    }
    r.grads.bias += dz.colwise().sum().transpose();
    dh_next.setZero();
    if (t > 1) k.gemm_nn_acc(dz.data(), p.w_hh.data(), dh_next.data(), rows, n, n);
  }
  return r;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }
std::string to_string(InitScheme s) { return s == InitScheme::uniform ? "uniform" : "gaussian"; }

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw InvalidArgument("unknown activation '" + s + "'");
}

InitScheme parse_init_scheme(const std::string& s) {
  if (s == "uniform") return InitScheme::uniform;
  if (s == "gaussian") return InitScheme::gaussian;
  throw InvalidArgument("unknown init scheme '" + s + "'");
}

RnnParams zero_params(int hidden, int d, Activation activation) {
  if (hidden < 1 || d < 1) throw InvalidArgument("RNN dimensions must be >= 1");
  return {RealMatrix::Zero(hidden, d), RealMatrix::Zero(hidden, hidden), RealMatrix::Zero(d, hidden),
          RealVector::Zero(hidden), activation};
}

void validate(const RnnParams& p) {
  const auto n = p.w_hh.rows();
  const auto d = p.w_uh.cols();
  if (n < 1 || d < 1 || p.w_hh.cols() != n || p.w_uh.rows() != n || p.w_r.rows() != d ||
      p.w_r.cols() != n || p.bias.size() != n) {
    throw InvalidArgument("RnnParams: inconsistent shapes (W_hh " + std::to_string(p.w_hh.rows()) + "x" +
                          std::to_string(p.w_hh.cols()) + ", W_uh " + std::to_string(p.w_uh.rows()) + "x" +
                          std::to_string(p.w_uh.cols()) + ", W_r " + std::to_string(p.w_r.rows()) + "x" +
                          std::to_string(p.w_r.cols()) + ")");
  }
  if (!p.w_hh.allFinite() || !p.w_uh.allFinite() || !p.w_r.allFinite() || !p.bias.allFinite()) {
    throw InvalidArgument("RnnParams: non-finite weights");
  }
}

RnnGrads RnnGrads::zeros_like(const RnnParams& p) {
  return {RealMatrix::Zero(p.w_uh.rows(), p.w_uh.cols()), RealMatrix::Zero(p.w_hh.rows(), p.w_hh.cols()),
          RealMatrix::Zero(p.w_r.rows(), p.w_r.cols()), RealVector::Zero(p.bias.size())};
}

double RnnGrads::squared_norm() const {
  return w_uh.squaredNorm() + w_hh.squaredNorm() + w_r.squaredNorm() + bias.squaredNorm();
}

void RnnGrads::scale(double factor) {
  w_uh *= factor;
  w_hh *= factor;
  w_r *= factor;
  bias *= factor;
}

Trajectory forward(const RnnParams& params, const RealMatrix& inputs, int horizon) {
  validate(params);
  if (inputs.cols() != params.dim()) {
    throw InvalidArgument("forward: input dimension " + std::to_string(inputs.cols()) + " does not match d=" +
                          std::to_string(params.dim()));
  }
  if (horizon < 0) throw InvalidArgument("forward: negative horizon");
  std::vector<RealMatrix> steps;
  for (Eigen::Index t = 0; t < inputs.rows(); ++t) steps.emplace_back(inputs.row(t));
  const auto total = static_cast<Eigen::Index>(inputs.rows() + horizon);
  Trajectory traj{RealMatrix(total, params.hidden()), RealMatrix(total, params.dim())};
  const BatchPass pass = run_batch(params, steps, 1, horizon, true);
  for (Eigen::Index t = 0; t < total; ++t) {
    traj.hidden.row(t) = pass.hs[static_cast<std::size_t>(t + 1)].row(0);
    traj.outputs.row(t) = pass.ys[static_cast<std::size_t>(t)].row(0);
  }
  return traj;
}

LossResult loss_and_grads(const RnnParams& params, const std::vector<Episode>& batch, int horizon) {
  if (batch.empty()) throw InvalidArgument("loss_and_grads: empty batch");
  validate(params);
  if (horizon < 0) throw InvalidArgument("loss_and_grads: negative horizon");
  const int s = static_cast<int>(batch.front().inputs.rows());
  for (const auto& ep : batch) {
    if (ep.inputs.rows() != s || ep.inputs.cols() != params.dim()) {
      throw InvalidArgument("loss_and_grads: episode input shape does not match the network");
    }
    if (ep.targets.rows() < horizon) throw InvalidArgument("loss_and_grads: horizon exceeds target length");
  }

  LossResult result;
  result.grads = RnnGrads::zeros_like(params);
  result.loss_by_step.assign(static_cast<std::size_t>(horizon), 0.0);
  if (horizon == 0) return result;

  const double count = static_cast<double>(batch.size()) * horizon * params.dim();
  const double grad_scale = 1.0 / count;
  const std::size_t n_chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<ChunkResult> chunks(n_chunks);
  auto run_chunk = [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const std::size_t last = std::min(batch.size(), first + kChunk);
    chunks[c] = chunk_loss_and_grads(params, batch, first, last, horizon, grad_scale);
  };

  const int workers = std::min<int>(worker_count(), static_cast<int>(n_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = static_cast<std::size_t>(w); c < n_chunks; c += static_cast<std::size_t>(workers)) run_chunk(c);
      });
    }
  }

  double sse = 0.0;
  long hits = 0;
  for (const auto& c : chunks) {
    sse += c.sse;
    hits += c.hits;
    for (std::size_t t = 0; t < c.sse_by_step.size(); ++t) result.loss_by_step[t] += c.sse_by_step[t];
    result.grads.w_uh += c.grads.w_uh;
    result.grads.w_hh += c.grads.w_hh;
    result.grads.w_r += c.grads.w_r;
    result.grads.bias += c.grads.bias;
  }
  const double per_step = static_cast<double>(batch.size()) * params.dim();
  for (double& l : result.loss_by_step) l /= per_step;
  result.loss = sse / count;
  result.sign_accuracy = static_cast<double>(hits) / count;
  return result;
}

AdamState AdamState::for_params(const RnnParams& p) {
  return {RnnGrads::zeros_like(p), RnnGrads::zeros_like(p), 0};
}

double clip_global_norm(RnnGrads& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

void adam_step(AdamState& state, RnnParams& params, RnnGrads grads, const TrainConfig& config) {
  clip_global_norm(grads, config.grad_clip);
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const kernels::AdamCoeffs c{config.learning_rate,
                              config.beta1,
                              config.beta2,
                              config.adam_eps,
                              1.0 - std::pow(config.beta1, t),
                              1.0 - std::pow(config.beta2, t),
                              config.weight_decay};
  const auto& k = kernels::active();
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    k.adam_update(param.data(), grad.data(), m.data(), v.data(), static_cast<std::size_t>(param.size()), c);
  };
  update(params.w_uh, grads.w_uh, state.m.w_uh, state.v.w_uh);
  update(params.w_hh, grads.w_hh, state.m.w_hh, state.v.w_hh);
  update(params.w_r, grads.w_r, state.m.w_r, state.v.w_r);
  if (config.train_bias) update(params.bias, grads.bias, state.m.bias, state.v.bias);
}

RnnParams init_params(int hidden, int d, InitScheme scheme, Rng& rng, Activation activation) {
  RnnParams p = zero_params(hidden, d, activation);
  auto fill = [&](auto& dist) {
    for (RealMatrix* m : {&p.w_uh, &p.w_hh, &p.w_r}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = dist(rng);
    }
  };
  const double n = static_cast<double>(hidden);
  if (scheme == InitScheme::uniform) {
    const double k = 1.0 / std::sqrt(n);
    std::uniform_real_distribution<double> dist(-k, k);
    fill(dist);
  } else {
    std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / n));
    fill(dist);
  }
  return p;
}

double accuracy(const RnnParams& params, const TaskSpec& spec, int horizon, int n_episodes, Rng& rng) {
  validate(params);
  if (horizon == 0) return 1.0;
  if (n_episodes < 1) throw InvalidArgument("accuracy: n_episodes must be >= 1");
  const auto batch = sample_batch(spec, n_episodes, horizon, rng);
  const auto inputs = stack_inputs(batch, 0, batch.size(), spec.s, spec.d);
  const BatchPass pass = run_batch(params, inputs, batch.size(), horizon, false);
  long hits = 0;
  for (int step = 1; step <= horizon; ++step) {
    const RealMatrix& y = pass.ys[static_cast<std::size_t>(spec.s + step - 1)];
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (int j = 0; j < spec.d; ++j) {
        const double sign = y(static_cast<Eigen::Index>(b), j) >= 0.0 ? 1.0 : -1.0;
        if (sign == batch[b].targets(step - 1, j)) ++hits;
      }
    }
  }
  return static_cast<double>(hits) / (static_cast<double>(n_episodes) * horizon * spec.d);
}

}  // namespace emt
