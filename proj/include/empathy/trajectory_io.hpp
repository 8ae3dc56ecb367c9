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

// Equilibrium trajectory files.
//
// CSV, one row per mesh node, columns
//   t, d1, v1, d2, v2, u1, u2,
//   lam1_d1, lam1_v1, lam1_d2, lam1_v2, lam2_d1, lam2_v1, lam2_d2, lam2_v2,
//   V1, V2
// where lamI_X is agent I's co-state entry for state coordinate X. Numbers
// use the shortest round-trip representation, so reading a file back yields
// bit-identical doubles.
//
// JSON sidecar: {"version", "theta", "converged", "residual_norm",
// "newton_iterations", "symmetric_start", "diagnostics", "residuals"}.

#ifndef EMPATHY_TRAJECTORY_IO_HPP_
#define EMPATHY_TRAJECTORY_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "empathy/bvp.hpp"
#include "empathy/io.hpp"
#include "empathy/pmp_check.hpp"
#include "json.hpp"

namespace empathy {

inline constexpr int kTrajectoryFormatVersion = 1;

template <std::size_t N>
std::vector<std::string> TrajectoryColumns() {
  std::vector<std::string> cols{"t"};
  for (std::size_t j = 1; j <= N; ++j) {
    cols.push_back("d" + std::to_string(j));
    cols.push_back("v" + std::to_string(j));
  }
  for (std::size_t j = 1; j <= N; ++j) cols.push_back("u" + std::to_string(j));
  for (std::size_t i = 1; i <= N; ++i)
    for (std::size_t j = 1; j <= N; ++j) {
      cols.push_back("lam" + std::to_string(i) + "_d" + std::to_string(j));
      cols.push_back("lam" + std::to_string(i) + "_v" + std::to_string(j));
    }
  for (std::size_t j = 1; j <= N; ++j) cols.push_back("V" + std::to_string(j));
  return cols;
}

template <std::size_t N>
std::string TrajectoryToCsv(const EquilibriumTrajectory<N>& traj) {
  std::string out;
  AppendCsvRow(out, TrajectoryColumns<N>());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::vector<std::string> row{FormatDouble(traj.times[k])};
    for (const auto& a : traj.states[k].agents) {
      row.push_back(FormatDouble(a.d));
      row.push_back(FormatDouble(a.v));
    }
    for (double u : traj.actions[k]) row.push_back(FormatDouble(u));
    for (const auto& c : traj.costates[k])
      for (double v : c) row.push_back(FormatDouble(v));
    for (double v : traj.values[k]) row.push_back(FormatDouble(v));
    AppendCsvRow(out, row);
  }
  return out;
}

inline nlohmann::json ResidualsToJson(const PmpResiduals& r) {
  return {{"initial_state", r.initial_state},     {"terminal_costate", r.terminal_costate},
          {"terminal_value", r.terminal_value},   {"state_dynamics", r.state_dynamics},
          {"costate_dynamics", r.costate_dynamics}, {"value_dynamics", r.value_dynamics},
          {"hamiltonian", r.hamiltonian},         {"action_bounds", r.action_bounds}};
}

template <std::size_t N>
nlohmann::json TrajectoryMeta(const EquilibriumTrajectory<N>& traj,
                              const PmpResiduals* residuals = nullptr) {
  nlohmann::json meta = {{"version", kTrajectoryFormatVersion},
                         {"theta", traj.theta},
                         {"converged", traj.converged},
                         {"residual_norm", traj.residual_norm},
                         {"newton_iterations", traj.newton_iterations},
                         {"symmetric_start", traj.symmetric_start},
                         {"diagnostics", traj.diagnostics}};
  if (!std::isfinite(traj.residual_norm)) meta["residual_norm"] = nullptr;
  if (residuals) meta["residuals"] = ResidualsToJson(*residuals);
  return meta;
}

template <std::size_t N>
EquilibriumTrajectory<N> TrajectoryFromCsv(const std::string& csv, const nlohmann::json& meta) {
  if (meta.value("version", 0) != kTrajectoryFormatVersion)
    throw IoError("unsupported trajectory format version");
  const auto table = ParseCsv(csv);
  if (table.header != TrajectoryColumns<N>()) throw IoError("unexpected trajectory columns");
  EquilibriumTrajectory<N> traj;
  traj.theta = meta.at("theta").get<Thetas<N>>();
  traj.converged = meta.at("converged").get<bool>();
  traj.residual_norm = meta.at("residual_norm").is_null()
                           ? std::numeric_limits<double>::infinity()
                           : meta.at("residual_norm").get<double>();
  traj.newton_iterations = meta.at("newton_iterations").get<int>();
  traj.symmetric_start = meta.at("symmetric_start").get<bool>();
  traj.diagnostics = meta.at("diagnostics").get<std::string>();
  for (const auto& row : table.rows) {
    std::size_t c = 0;
    auto next = [&] { return ParseDouble(row[c++]); };
    const double t = next();
    traj.times.push_back(t);
    JointState<N> x;
    x.t = t;
    for (auto& a : x.agents) {
      a.d = next();
      a.v = next();
    }
    traj.states.push_back(x);
    Actions<N> u{};
    for (auto& v : u) v = next();
    traj.actions.push_back(u);
    Costates<N> lam{};
    for (auto& ci : lam)
      for (auto& v : ci) v = next();
    traj.costates.push_back(lam);
    std::array<double, N> values{};
    for (auto& v : values) v = next();
    traj.values.push_back(values);
  }
  return traj;
}

template <std::size_t N>
void WriteTrajectory(const std::filesystem::path& stem, const EquilibriumTrajectory<N>& traj,
                     const PmpResiduals* residuals = nullptr) {
  WriteFile(stem.string() + ".csv", TrajectoryToCsv(traj));
  WriteFile(stem.string() + ".json", TrajectoryMeta(traj, residuals).dump(2) + "\n");
}

template <std::size_t N>
EquilibriumTrajectory<N> ReadTrajectory(const std::filesystem::path& stem) {
  const auto meta = nlohmann::json::parse(ReadFile(stem.string() + ".json"));
  return TrajectoryFromCsv<N>(ReadFile(stem.string() + ".csv"), meta);
}

}  // namespace empathy

#endif  // EMPATHY_TRAJECTORY_IO_HPP_
