// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>

#include "emt/error.hpp"
#include "emt/rnn.hpp"

namespace emt {

namespace {

nlohmann::json flat(const RealMatrix& m) {
  return nlohmann::json(std::vector<double>(m.data(), m.data() + m.size()));
}

RealMatrix unflatten(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw FormatError(std::string("checkpoint: ") + name + " has " + std::to_string(values.size()) +
                      " entries, expected " + std::to_string(rows * cols));
  }
  RealMatrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

}  // namespace

nlohmann::json matrix_to_json(const RealMatrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat(m)}};
}

RealMatrix matrix_from_json(const nlohmann::json& j) {
  try {
    return unflatten(j.at("data"), j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>(), "matrix");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("matrix json: ") + e.what());
  }
}

nlohmann::json checkpoint_to_json(const RnnParams& p, const CheckpointMeta& meta) {
  validate(p);
  nlohmann::json j = {
      {"format_version", kCheckpointFormatVersion},
      {"activation", to_string(p.activation)},
      {"dims", {{"N_h", p.hidden()}, {"d", p.dim()}}},
      {"weights",
       {{"w_uh", flat(p.w_uh)},
        {"w_hh", flat(p.w_hh)},
        {"w_r", flat(p.w_r)},
        {"bias", std::vector<double>(p.bias.data(), p.bias.data() + p.bias.size())}}},
      {"init_scheme", meta.init_scheme},
      {"rng_seed", meta.rng_seed},
      {"training_meta", meta.training_meta},
  };
  if (!meta.blueprint.is_null()) j["blueprint"] = meta.blueprint;
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint ck;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("checkpoint: format_version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointFormatVersion) + ")");
    }
    const int n = j.at("dims").at("N_h").get<int>();
    const int d = j.at("dims").at("d").get<int>();
    if (n < 1 || d < 1) throw FormatError("checkpoint: dims must be positive");
    const auto& w = j.at("weights");
    ck.params.activation = parse_activation(j.at("activation").get<std::string>());
    ck.params.w_uh = unflatten(w.at("w_uh"), n, d, "w_uh");
    ck.params.w_hh = unflatten(w.at("w_hh"), n, n, "w_hh");
    ck.params.w_r = unflatten(w.at("w_r"), d, n, "w_r");
    ck.params.bias = RealVector::Zero(n);
    if (w.contains("bias")) ck.params.bias = unflatten(w.at("bias"), n, 1, "bias").col(0);
    ck.meta.init_scheme = j.value("init_scheme", std::string("none"));
    ck.meta.rng_seed = j.value("rng_seed", std::uint64_t{0});
    ck.meta.training_meta = j.value("training_meta", nlohmann::json::object());
    if (j.contains("blueprint")) ck.meta.blueprint = j.at("blueprint");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const RnnParams& params, const CheckpointMeta& meta, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write " + path.string());
  os << checkpoint_to_json(params, meta).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<ExpectedDims> expected) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot read checkpoint " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": parse error: " + e.what());
  }
  Checkpoint ck = checkpoint_from_json(j);
  if (expected && ((expected->hidden >= 0 && ck.params.hidden() != expected->hidden) || ck.params.dim() != expected->d)) {
    throw FormatError("checkpoint " + path.string() + " has N_h=" + std::to_string(ck.params.hidden()) +
                      ", d=" + std::to_string(ck.params.dim()) + " but N_h=" +
                      (expected->hidden >= 0 ? std::to_string(expected->hidden) : std::string("any")) +
                      ", d=" + std::to_string(expected->d) + " was expected");
  }
  return ck;
}

}  // namespace emt
