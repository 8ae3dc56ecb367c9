// Copyright 2026 The Empathic Games Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Value-surrogate weight file (JSON):
//
//   {
//     "version": 1,
//     "architecture": "fc5-(fc16-tanh)x3-(fc2-tanh), gated two-branch",
//     "theta": [theta1, theta2],
//     "branches": [                         // f1 then f2
//       {"layers": [{"shape": [out, in], "weights": [...row-major...],
//                    "bias": [...]}, ...]}, ...],
//     "gate": {"slope": k, "bias": b, "zone_exit": z},
//     "normalization": {"input_offset": [5], "input_scale": [5],
//                       "output_scale": s},
//     "training": {...}
//   }
//
// The network evaluates
//   z   = (input - input_offset) * input_scale,   input = (d1, v1, d2, v2, t)
//   eta = sigmoid(k * (max(d1, d2) - z) + b)
//   V   = s * (eta * f1(z) + (1 - eta) * f2(z)).
// Doubles are written in shortest round-trip form, so reloading is bit-exact.

#ifndef EMPATHY_SURROGATE_IO_HPP_
#define EMPATHY_SURROGATE_IO_HPP_

#include <filesystem>
#include <string>

#include "empathy/io.hpp"
#include "empathy/value_net.hpp"
#include "json.hpp"

namespace empathy {

inline constexpr int kWeightFormatVersion = 1;

namespace surrogate_detail {

inline nlohmann::json NumberOrNull(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline double NumberOrNan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace surrogate_detail

inline nlohmann::json SurrogateToJson(const ValueSurrogate& net) {
  using surrogate_detail::NumberOrNull;
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& br : net.branches) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : br.layers) {
      std::vector<double> w;
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
      std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
      layers.push_back({{"shape", {l.weights.rows(), l.weights.cols()}}, {"weights", w}, {"bias", b}});
    }
    branches.push_back({{"layers", layers}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (double v : net.training.loss_history) history.push_back(NumberOrNull(v));
  return {{"version", kWeightFormatVersion},
          {"architecture", "fc5-(fc16-tanh)x3-(fc2-tanh), gated two-branch"},
          {"theta", net.theta},
          {"branches", branches},
          {"gate", {{"slope", net.gate_slope}, {"bias", net.gate_bias}, {"zone_exit", net.zone_exit}}},
          {"normalization",
           {{"input_offset", net.input_offset},
            {"input_scale", net.input_scale},
            {"output_scale", net.output_scale}}},
          {"training",
           {{"epochs", net.training.epochs},
            {"seed", net.training.seed},
            {"costate_weight", net.training.costate_weight},
            {"learning_rate", net.training.learning_rate},
            {"train_value_rel_mae", NumberOrNull(net.training.train_value_rel_mae)},
            {"train_costate_rel_mae", NumberOrNull(net.training.train_costate_rel_mae)},
            {"test_value_rel_mae", NumberOrNull(net.training.test_value_rel_mae)},
            {"test_costate_rel_mae", NumberOrNull(net.training.test_costate_rel_mae)},
            {"loss_history", history}}}};
}

inline ValueSurrogate SurrogateFromJson(const nlohmann::json& j) {
  using surrogate_detail::NumberOrNan;
  if (j.value("version", 0) != kWeightFormatVersion)
    throw IoError("unsupported weight file version");
  ValueSurrogate net = ValueSurrogate::Zero(j.at("theta").get<Thetas<2>>());
  const auto& branches = j.at("branches");
  if (branches.size() != 2) throw IoError("weight file must hold two branches");
  for (std::size_t b = 0; b < 2; ++b) {
    const auto& layers = branches[b].at("layers");
    if (layers.size() != 4) throw IoError("each branch must hold four layers");
    for (std::size_t l = 0; l < 4; ++l) {
      auto& layer = net.branches[b].layers[l];
      const auto shape = layers[l].at("shape").get<std::array<Eigen::Index, 2>>();
      if (shape[0] != layer.weights.rows() || shape[1] != layer.weights.cols())
        throw IoError("layer shape does not match the architecture");
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto bias = layers[l].at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != layer.weights.size() ||
          static_cast<Eigen::Index>(bias.size()) != layer.bias.size())
        throw IoError("layer array sizes do not match the shape");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = w[k++];
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = bias[static_cast<std::size_t>(r)];
    }
  }
  const auto& gate = j.at("gate");
  net.gate_slope = gate.at("slope").get<double>();
  net.gate_bias = gate.at("bias").get<double>();
  net.zone_exit = gate.at("zone_exit").get<double>();
  const auto& norm = j.at("normalization");
  net.input_offset = norm.at("input_offset").get<std::array<double, kNetInputs>>();
  net.input_scale = norm.at("input_scale").get<std::array<double, kNetInputs>>();
  net.output_scale = norm.at("output_scale").get<double>();
  if (j.contains("training")) {
    const auto& t = j.at("training");
    net.training.epochs = t.value("epochs", 0);
    net.training.seed = t.value("seed", std::uint64_t{0});
    net.training.costate_weight = t.value("costate_weight", 1.0);
    net.training.learning_rate = t.value("learning_rate", 0.01);
    net.training.train_value_rel_mae = NumberOrNan(t.at("train_value_rel_mae"));
    net.training.train_costate_rel_mae = NumberOrNan(t.at("train_costate_rel_mae"));
    net.training.test_value_rel_mae = NumberOrNan(t.at("test_value_rel_mae"));
    net.training.test_costate_rel_mae = NumberOrNan(t.at("test_costate_rel_mae"));
    for (const auto& v : t.at("loss_history")) net.training.loss_history.push_back(NumberOrNan(v));
  }
  return net;
}

inline void WriteSurrogate(const std::filesystem::path& path, const ValueSurrogate& net) {
  WriteFile(path, SurrogateToJson(net).dump(1) + "\n");
}

inline ValueSurrogate ReadSurrogate(const std::filesystem::path& path) {
  return SurrogateFromJson(nlohmann::json::parse(ReadFile(path)));
}

inline std::string SurrogateFileName(const Thetas<2>& theta) {
  return "surrogate_" + ThetaPairName(theta) + ".json";
}

}  // namespace empathy

#endif  // EMPATHY_SURROGATE_IO_HPP_
