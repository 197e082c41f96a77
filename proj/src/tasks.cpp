// SPDX-License-Identifier: Apache-2.0
#include "emt/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>

#include "emt/error.hpp"

namespace emt {

namespace {

void require_dims(int s, int d) {
  if (s < 1 || d < 1) {
    throw InvalidArgument("task dimensions must be >= 1 (got s=" + std::to_string(s) +
                          ", d=" + std::to_string(d) + ")");
  }
}

bool is_binary(double x) { return x == 1.0 || x == -1.0; }

}  // namespace

TaskSpec::Selection TaskSpec::selection(int row) const {
  for (int k = 0; k < s; ++k) {
    for (int j = 0; j < d; ++j) {
      const double c = comp[static_cast<std::size_t>(k)](row, j);
      if (c != 0.0) return {k + 1, j, c};
    }
  }
  throw InvalidArgument("task row " + std::to_string(row) + " selects nothing");
}

bool TaskSpec::reads_recent_lags() const {
  for (int r = 0; r < d; ++r) {
    if (selection(r).lag < s) return true;
  }
  return false;
}

void validate(const TaskSpec& spec) {
  require_dims(spec.s, spec.d);
  if (static_cast<int>(spec.comp.size()) != spec.s) {
    throw InvalidArgument("task '" + spec.name + "': expected " + std::to_string(spec.s) +
                          " composition matrices, got " + std::to_string(spec.comp.size()));
  }
  for (const auto& c : spec.comp) {
    if (c.rows() != spec.d || c.cols() != spec.d) {
      throw InvalidArgument("task '" + spec.name + "': composition matrix is not d x d");
    }
  }
  for (int r = 0; r < spec.d; ++r) {
    int nonzeros = 0;
    for (const auto& c : spec.comp) {
      for (int j = 0; j < spec.d; ++j) {
        const double x = c(r, j);
        if (x == 0.0) continue;
        if (!is_binary(x)) {
          throw InvalidArgument("task '" + spec.name + "': entries must be -1, 0 or +1");
        }
        ++nonzeros;
      }
    }
    if (nonzeros != 1) {
      throw InvalidArgument("task '" + spec.name + "': row " + std::to_string(r) + " has " +
                            std::to_string(nonzeros) +
                            " nonzeros; a binary-codomain linear map needs exactly one");
    }
  }
}

TaskSpec make_repeat_copy(int s, int d) {
  require_dims(s, d);
  TaskSpec spec{"repeat_copy", s, d, {}};
  for (int k = 1; k <= s; ++k) {
    spec.comp.push_back(k == s ? RealMatrix(RealMatrix::Identity(d, d)) : RealMatrix(RealMatrix::Zero(d, d)));
  }
  return spec;
}

TaskSpec make_compose_copy(int s, int d, std::uint64_t seed) {
  require_dims(s, d);
  Rng rng(seed);
  TaskSpec spec{"compose_copy", s, d, std::vector<RealMatrix>(static_cast<std::size_t>(s), RealMatrix::Zero(d, d))};

  // Lag per output row: distinct lags where possible, the rest uniform.
  std::vector<int> lags(static_cast<std::size_t>(s));
  std::iota(lags.begin(), lags.end(), 1);
  std::shuffle(lags.begin(), lags.end(), rng);
  std::vector<int> row_lag(static_cast<std::size_t>(d));
  std::uniform_int_distribution<int> any_lag(1, s);
  for (int r = 0; r < d; ++r) {
    row_lag[static_cast<std::size_t>(r)] = r < s ? lags[static_cast<std::size_t>(r)] : any_lag(rng);
  }
  std::shuffle(row_lag.begin(), row_lag.end(), rng);

  // Rows sharing a lag read distinct components, so s = 1 gives a signed
  // permutation. Each row's component is still uniform on its own.
  std::vector<std::vector<int>> unused(static_cast<std::size_t>(s));
  for (auto& pool : unused) {
    pool.resize(static_cast<std::size_t>(d));
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
  }
  std::bernoulli_distribution negative(0.5);
  for (int r = 0; r < d; ++r) {
    const int lag = row_lag[static_cast<std::size_t>(r)];
    auto& pool = unused[static_cast<std::size_t>(lag - 1)];
    const int j = pool.back();
    pool.pop_back();
    spec.comp[static_cast<std::size_t>(lag - 1)](r, j) = negative(rng) ? -1.0 : 1.0;
  }
  return spec;
}

Episode evolve_oracle(const TaskSpec& spec, const RealMatrix& inputs, int horizon) {
  if (inputs.rows() != spec.s || inputs.cols() != spec.d) {
    throw InvalidArgument("evolve_oracle: inputs must be " + std::to_string(spec.s) + "x" +
                          std::to_string(spec.d));
  }
  if (horizon < 0) throw InvalidArgument("evolve_oracle: negative horizon");
  for (Eigen::Index i = 0; i < inputs.size(); ++i) {
    if (!is_binary(inputs.data()[i])) {
      throw InvalidArgument("evolve_oracle: input entries must be -1 or +1");
    }
  }
  RealMatrix history(spec.s + horizon, spec.d);
  history.topRows(spec.s) = inputs;
  for (int t = spec.s; t < spec.s + horizon; ++t) {
    history.row(t).setZero();
    for (int k = 1; k <= spec.s; ++k) {
      history.row(t) += (spec.comp[static_cast<std::size_t>(k - 1)] * history.row(t - k).transpose()).transpose();
    }
  }
  return {inputs, history.bottomRows(horizon)};
}

RealMatrix sample_inputs(const TaskSpec& spec, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  RealMatrix inputs(spec.s, spec.d);
  for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = coin(rng) ? 1.0 : -1.0;
  return inputs;
}

std::vector<Episode> sample_batch(const TaskSpec& spec, int batch_size, int horizon, Rng& rng) {
  if (batch_size < 1) throw InvalidArgument("sample_batch: batch_size must be >= 1");
  std::vector<Episode> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) batch.push_back(evolve_oracle(spec, sample_inputs(spec, rng), horizon));
  return batch;
}

double sign_match_fraction(const RealMatrix& outputs, const RealMatrix& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
    throw InvalidArgument("sign_match_fraction: shape mismatch");
  }
  if (outputs.size() == 0) return 1.0;
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < outputs.size(); ++i) {
    const double sign = outputs.data()[i] >= 0.0 ? 1.0 : -1.0;
    if (sign == targets.data()[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outputs.size());
}

nlohmann::json task_to_json(const TaskSpec& spec) {
  nlohmann::json comp = nlohmann::json::array();
  for (const auto& c : spec.comp) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < c.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < c.cols(); ++j) row.push_back(static_cast<int>(c(r, j)));
      rows.push_back(std::move(row));
    }
    comp.push_back(std::move(rows));
  }
  return {{"name", spec.name}, {"s", spec.s}, {"d", spec.d}, {"comp", std::move(comp)}};
}

TaskSpec task_from_json(const nlohmann::json& j) {
  TaskSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.s = j.at("s").get<int>();
    spec.d = j.at("d").get<int>();
    require_dims(spec.s, spec.d);
    for (const auto& block : j.at("comp")) {
      RealMatrix c = RealMatrix::Zero(spec.d, spec.d);
      if (static_cast<int>(block.size()) != spec.d) throw FormatError("task json: comp block has wrong row count");
      for (int r = 0; r < spec.d; ++r) {
        if (static_cast<int>(block[static_cast<std::size_t>(r)].size()) != spec.d) {
          throw FormatError("task json: comp row has wrong length");
        }
        for (int c2 = 0; c2 < spec.d; ++c2) c(r, c2) = block[static_cast<std::size_t>(r)][static_cast<std::size_t>(c2)].get<int>();
      }
      spec.comp.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("task json: ") + e.what());
  }
  validate(spec);
  return spec;
}

void save_task(const TaskSpec& spec, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write " + path.string());
  os << task_to_json(spec).dump(2) << '\n';
}

TaskSpec load_task(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot read " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return task_from_json(j);
}

void write_episode_csv(std::ostream& os, const Episode& episode, bool include_inputs) {
  const Eigen::Index d = episode.inputs.cols();
  os << "t,phase";
  for (Eigen::Index j = 0; j < d; ++j) os << ",u" << (j + 1);
  os << '\n';
  auto write_row = [&](Eigen::Index t, const char* phase, const auto& row) {
    os << t << ',' << phase;
    for (Eigen::Index j = 0; j < d; ++j) os << ',' << static_cast<int>(row(j));
    os << '\n';
  };
  const Eigen::Index s = episode.inputs.rows();
  if (include_inputs) {
    for (Eigen::Index t = 0; t < s; ++t) write_row(t + 1, "input", episode.inputs.row(t));
  }
  for (Eigen::Index t = 0; t < episode.targets.rows(); ++t) write_row(s + t + 1, "output", episode.targets.row(t));
}

}  // namespace emt
