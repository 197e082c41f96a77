// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <ostream>

#include "emt/error.hpp"
#include "emt/rnn.hpp"

namespace emt {

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw InvalidArgument("TrainConfig: " + what); };
  if (c.hidden < 1) fail("hidden must be >= 1");
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.iterations < 0) fail("iterations must be >= 0");
  if (c.weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (c.grad_clip < 0.0) fail("grad_clip must be >= 0");
  if (!(c.curriculum.gamma > 1.0)) fail("curriculum gamma must be > 1");
  if (c.curriculum.h0_horizon < 1 || c.curriculum.h0_horizon > c.curriculum.h_max) {
    fail("curriculum needs 0 < h0_horizon <= h_max");
  }
  if (!(c.curriculum.epsilon > 0.0)) fail("curriculum epsilon must be > 0");
  if (!(c.loss_ema_decay >= 0.0 && c.loss_ema_decay < 1.0)) fail("loss_ema_decay must lie in [0, 1)");
}

nlohmann::json config_to_json(const TrainConfig& c) {
  return {
      {"hidden", c.hidden},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"iterations", c.iterations},
      {"weight_decay", c.weight_decay},
      {"grad_clip", c.grad_clip},
      {"init", to_string(c.init)},
      {"activation", to_string(c.activation)},
      {"curriculum",
       {{"h0_horizon", c.curriculum.h0_horizon},
        {"h_max", c.curriculum.h_max},
        {"gamma", c.curriculum.gamma},
        {"epsilon", c.curriculum.epsilon}}},
      {"rng_seed", c.rng_seed},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"adam_eps", c.adam_eps},
      {"loss_ema_decay", c.loss_ema_decay},
      {"train_bias", c.train_bias},
  };
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    auto read = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    read("hidden", c.hidden);
    read("learning_rate", c.learning_rate);
    read("batch_size", c.batch_size);
    read("iterations", c.iterations);
    read("weight_decay", c.weight_decay);
    read("grad_clip", c.grad_clip);
    read("rng_seed", c.rng_seed);
    read("beta1", c.beta1);
    read("beta2", c.beta2);
    read("adam_eps", c.adam_eps);
    read("loss_ema_decay", c.loss_ema_decay);
    read("train_bias", c.train_bias);
    if (j.contains("init")) c.init = parse_init_scheme(j.at("init").get<std::string>());
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    if (j.contains("curriculum")) {
      const auto& cur = j.at("curriculum");
      if (cur.contains("h0_horizon")) c.curriculum.h0_horizon = cur.at("h0_horizon").get<int>();
      if (cur.contains("h_max")) c.curriculum.h_max = cur.at("h_max").get<int>();
      if (cur.contains("gamma")) c.curriculum.gamma = cur.at("gamma").get<double>();
      if (cur.contains("epsilon")) c.curriculum.epsilon = cur.at("epsilon").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("train config: ") + e.what());
  }
  return c;
}

TrainReport train(const TaskSpec& spec, const TrainConfig& config, const TrainHooks& hooks) {
  validate(spec);
  validate(config);
  const auto start = std::chrono::steady_clock::now();

  Rng rng(config.rng_seed);
  TrainReport report;
  report.params = init_params(config.hidden, spec.d, config.init, rng, config.activation);
  AdamState adam = AdamState::for_params(report.params);

  const auto& cur = config.curriculum;
  std::vector<double> rolling(static_cast<std::size_t>(cur.h_max), std::numeric_limits<double>::quiet_NaN());
  double horizon_real = cur.h0_horizon;
  report.loss.reserve(static_cast<std::size_t>(config.iterations));
  report.horizon.reserve(static_cast<std::size_t>(config.iterations));
  report.accuracy.reserve(static_cast<std::size_t>(config.iterations));

  for (int it = 0; it < config.iterations; ++it) {
    const int horizon = std::clamp(static_cast<int>(std::lround(horizon_real)), cur.h0_horizon, cur.h_max);
    const auto batch = sample_batch(spec, config.batch_size, horizon, rng);
    LossResult lr = loss_and_grads(report.params, batch, horizon);
    if (!std::isfinite(lr.loss)) {
      throw NumericalError("train: non-finite loss at iteration " + std::to_string(it) + " (horizon " +
                           std::to_string(horizon) + ")");
    }
    adam_step(adam, report.params, std::move(lr.grads), config);

    double worst = 0.0;
    for (int t = 0; t < horizon; ++t) {
      double& l = rolling[static_cast<std::size_t>(t)];
      const double obs = lr.loss_by_step[static_cast<std::size_t>(t)];
      l = std::isnan(l) ? obs : config.loss_ema_decay * l + (1.0 - config.loss_ema_decay) * obs;
      worst = std::max(worst, l);
    }
    horizon_real = worst < cur.epsilon ? horizon_real * cur.gamma : horizon_real / cur.gamma;
    horizon_real = std::clamp(horizon_real, static_cast<double>(cur.h0_horizon), static_cast<double>(cur.h_max));

    report.loss.push_back(lr.loss);
    report.horizon.push_back(horizon);
    report.accuracy.push_back(lr.sign_accuracy);

    if (hooks.save_every > 0 && hooks.on_checkpoint && (it + 1) % hooks.save_every == 0) {
      hooks.on_checkpoint(it + 1, report.params);
    }
    if (hooks.should_stop && hooks.should_stop(it + 1, report.params)) break;
  }
  report.loss_by_timestep = std::move(rolling);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report_csv(std::ostream& os, const TrainReport& report) {
  os << "iteration,loss,horizon,accuracy\n";
  char buf[128];
  for (std::size_t i = 0; i < report.loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%.17g\n", i + 1, report.loss[i], report.horizon[i],
                  report.accuracy[i]);
    os << buf;
  }
}

}  // namespace emt
