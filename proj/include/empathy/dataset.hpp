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

// Equilibrium dataset: one BVP solve per (initial state, aggressiveness pair),
// each converged trajectory sampled on the simulation time grid.
//
// Files:
//   <stem>.csv   traj, split, theta1, theta2, t, d1, v1, d2, v2, V1, V2,
//                lam1_d1 ... lam2_v2
//   <stem>.json  manifest: config hash, solve table, test-sample seed,
//                swap-symmetry summary

#ifndef EMPATHY_DATASET_HPP_
#define EMPATHY_DATASET_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "empathy/bvp.hpp"
#include "empathy/io.hpp"
#include "empathy/parallel.hpp"
#include "empathy/pmp_check.hpp"
#include "empathy/trajectory_io.hpp"
#include "empathy/value_net.hpp"
#include "json.hpp"

namespace empathy {

inline constexpr int kDatasetFormatVersion = 1;

class AllSolvesFailed : public Error {
 public:
  using Error::Error;
};

// Square meshgrid of initial positions at the reference velocity; d1 varies
// slowest.
inline std::vector<JointState<2>> GridInitialStates(const GameConfig& cfg, double lo = 15.0,
                                                    double hi = 20.0, double spacing = 0.5) {
  if (!(spacing > 0.0) || hi < lo) throw ConfigError("invalid initial-state mesh");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
  std::vector<JointState<2>> out;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      JointState<2> x;
      x.agents[0] = {lo + spacing * static_cast<double>(a), cfg.reference_velocity};
      x.agents[1] = {lo + spacing * static_cast<double>(b), cfg.reference_velocity};
      out.push_back(x);
    }
  return out;
}

// Latin-hypercube sample of positions in [lo, hi]^2.
inline std::vector<JointState<2>> LatinHypercubeStates(const GameConfig& cfg, std::size_t count,
                                                       std::uint64_t seed, double lo = 15.0,
                                                       double hi = 20.0) {
  Rng rng(seed);
  std::array<std::vector<std::size_t>, 2> strata;
  for (auto& s : strata) {
    s.resize(count);
    for (std::size_t k = 0; k < count; ++k) s[k] = k;
    for (std::size_t k = count; k > 1; --k) std::swap(s[k - 1], s[rng.Index(k)]);
  }
  std::vector<JointState<2>> out(count);
  const double width = (hi - lo) / static_cast<double>(std::max<std::size_t>(count, 1));
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t j = 0; j < 2; ++j)
      out[k].agents[j] = {lo + width * (static_cast<double>(strata[j][k]) + rng.Uniform()),
                          cfg.reference_velocity};
  return out;
}

inline std::vector<Thetas<2>> AllThetaPairs() {
  std::vector<Thetas<2>> out;
  for (auto a : {Aggressiveness::kAggressive, Aggressiveness::kNonAggressive})
    for (auto b : {Aggressiveness::kAggressive, Aggressiveness::kNonAggressive})
      out.push_back({ThetaValue(a), ThetaValue(b)});
  return out;
}

inline std::vector<double> SimulationTimes(const GameConfig& cfg) {
  std::vector<double> t;
  const std::size_t steps = cfg.NumSteps();
  for (std::size_t k = 0; k <= steps; ++k) t.push_back(static_cast<double>(k) * cfg.dt);
  if (!t.empty()) t.back() = cfg.horizon;
  return t;
}

struct SolveSummary {
  int id = 0;
  std::string stem;
  JointState<2> x0;
  Thetas<2> theta{};
  Split split = Split::kTrain;
  bool converged = false;
  double residual_norm = 0.0;
  PmpResiduals residuals;
  std::size_t mesh_nodes = 0;
  int newton_iterations = 0;
  bool symmetric_start = false;
  bool cached = false;
  double seconds = 0.0;
  std::string diagnostics;
};

struct SwapCheck {
  int solve = -1;
  int mirror = -1;
  double state_error = 0.0;  // max |x - swap(x_mirror)| over samples
  double value_error = 0.0;  // max |V_1 - V_2(mirror)| relative to 1 + |V|
};

struct ValueDataset {
  std::vector<ValueRecord> records;
  std::vector<SolveSummary> solves;
  std::vector<SwapCheck> swap_checks;
  std::uint64_t test_seed = 0;
  std::string config_hash;

  std::size_t NumConverged() const {
    return static_cast<std::size_t>(
        std::count_if(solves.begin(), solves.end(), [](const auto& s) { return s.converged; }));
  }
};

struct DatasetOptions {
  std::vector<JointState<2>> train_states;
  std::vector<JointState<2>> test_states;
  std::vector<Thetas<2>> thetas = AllThetaPairs();
  SolverOptions solver;
  MeshOptions mesh;
  std::size_t jobs = 1;
  std::uint64_t test_seed = 0;
  // When set, sampled trajectories are written here and converged ones are
  // reused on later runs with the same config.
  std::optional<std::filesystem::path> trajectory_dir;
  std::function<void(const SolveSummary&, std::size_t done, std::size_t total)> progress;
};

inline DatasetOptions DefaultDatasetOptions(const GameConfig& cfg, double spacing = 0.5,
                                            std::uint64_t test_seed = 36) {
  DatasetOptions opts;
  opts.train_states = GridInitialStates(cfg, 15.0, 20.0, spacing);
  opts.test_states = LatinHypercubeStates(cfg, 36, test_seed);
  opts.test_seed = test_seed;
  return opts;
}

namespace dataset_detail {

struct Job {
  JointState<2> x0;
  Thetas<2> theta{};
  Split split = Split::kTrain;
  std::size_t index = 0;
};

inline std::string StemFor(const Job& job) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", job.index);
  return ThetaPairName(job.theta) + (job.split == Split::kTrain ? "_train_" : "_test_") + buf;
}

inline nlohmann::json StateJson(const JointState<2>& x) {
  return {x.agents[0].d, x.agents[0].v, x.agents[1].d, x.agents[1].v};
}

inline PmpResiduals ResidualsFromJson(const nlohmann::json& j) {
  PmpResiduals r;
  r.initial_state = j.at("initial_state").get<double>();
  r.terminal_costate = j.at("terminal_costate").get<double>();
  r.terminal_value = j.at("terminal_value").get<double>();
  r.state_dynamics = j.at("state_dynamics").get<double>();
  r.costate_dynamics = j.at("costate_dynamics").get<double>();
  r.value_dynamics = j.at("value_dynamics").get<double>();
  r.hamiltonian = j.at("hamiltonian").get<double>();
  r.action_bounds = j.at("action_bounds").get<double>();
  return r;
}

// Reads a cached solve if it matches the job and config.
inline bool LoadCached(const std::filesystem::path& stem, const Job& job,
                       const std::string& config_hash, EquilibriumTrajectory<2>* traj,
                       SolveSummary* summary) {
  if (!std::filesystem::exists(stem.string() + ".json") ||
      !std::filesystem::exists(stem.string() + ".csv"))
    return false;
  try {
    const auto meta = nlohmann::json::parse(ReadFile(stem.string() + ".json"));
    if (meta.value("config_hash", std::string()) != config_hash) return false;
    if (meta.at("x0") != StateJson(job.x0)) return false;
    if (!meta.at("converged").get<bool>() || !meta.contains("residuals")) return false;
    *traj = ReadTrajectory<2>(stem);
    if (traj->theta != job.theta) return false;
    summary->converged = true;
    summary->residual_norm = traj->residual_norm;
    summary->residuals = ResidualsFromJson(meta.at("residuals"));
    summary->mesh_nodes = meta.at("mesh_nodes").get<std::size_t>();
    summary->newton_iterations = traj->newton_iterations;
    summary->symmetric_start = traj->symmetric_start;
    summary->diagnostics = traj->diagnostics;
    summary->cached = true;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace dataset_detail

// Solves every (initial state, pair) job, verifies each converged solution
// independently and samples it on the simulation grid. Non-converged solves
// are kept in the solve table but contribute no records.
inline ValueDataset GenerateDataset(const GameConfig& cfg, const DatasetOptions& opts) {
  using namespace dataset_detail;
  cfg.Validate();
  ValueDataset ds;
  ds.test_seed = opts.test_seed;
  ds.config_hash = ConfigHash(cfg);
  std::vector<Job> jobs;
  for (const auto& theta : opts.thetas) {
    for (std::size_t k = 0; k < opts.train_states.size(); ++k)
      jobs.push_back({opts.train_states[k], theta, Split::kTrain, k});
    for (std::size_t k = 0; k < opts.test_states.size(); ++k)
      jobs.push_back({opts.test_states[k], theta, Split::kTest, k});
  }
  if (jobs.empty()) throw AllSolvesFailed("no initial states to solve");

  const auto times = SimulationTimes(cfg);
  std::vector<SolveSummary> summaries(jobs.size());
  std::vector<EquilibriumTrajectory<2>> sampled(jobs.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  ParallelFor(jobs.size(), opts.jobs, [&](std::size_t n) {
    const auto& job = jobs[n];
    SolveSummary& s = summaries[n];
    s.id = static_cast<int>(n);
    s.stem = StemFor(job);
    s.x0 = job.x0;
    s.theta = job.theta;
    s.split = job.split;
    const auto start = std::chrono::steady_clock::now();
    std::optional<std::filesystem::path> stem;
    if (opts.trajectory_dir) stem = *opts.trajectory_dir / s.stem;
    if (!(stem && LoadCached(*stem, job, ds.config_hash, &sampled[n], &s))) {
      const auto prob = MakeProblem(job.x0, job.theta, cfg, opts.mesh);
      const auto traj = SolveBvp(prob, BuildInitialGuess(prob), opts.solver);
      s.mesh_nodes = traj.size();
      s.newton_iterations = traj.newton_iterations;
      s.symmetric_start = traj.symmetric_start;
      s.diagnostics = traj.diagnostics;
      s.residual_norm = traj.residual_norm;
      if (traj.converged) {
        s.residuals = VerifyPmpResiduals(traj, prob);
        s.converged = true;
        sampled[n] = ResampleTrajectory(traj, cfg, times);
      } else {
        sampled[n] = traj;
        sampled[n].times.clear();
        sampled[n].states.clear();
        sampled[n].actions.clear();
        sampled[n].costates.clear();
        sampled[n].values.clear();
      }
      if (stem) {
        auto meta = TrajectoryMeta(sampled[n], s.converged ? &s.residuals : nullptr);
        meta["config_hash"] = ds.config_hash;
        meta["x0"] = StateJson(job.x0);
        meta["mesh_nodes"] = s.mesh_nodes;
        WriteFile(stem->string() + ".csv", TrajectoryToCsv(sampled[n]));
        WriteFile(stem->string() + ".json", meta.dump(2) + "\n");
      }
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::size_t count = ++done;
    if (opts.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      opts.progress(s, count, jobs.size());
    }
  });

  for (std::size_t n = 0; n < jobs.size(); ++n) {
    if (!summaries[n].converged) continue;
    const auto& traj = sampled[n];
    for (std::size_t k = 0; k < traj.size(); ++k) {
      ValueRecord r;
      r.x = traj.states[k];
      r.x.t = traj.times[k];
      r.theta = jobs[n].theta;
      r.value = traj.values[k];
      r.costate = traj.costates[k];
      r.split = jobs[n].split;
      r.trajectory = static_cast<int>(n);
      ds.records.push_back(r);
    }
  }

  // Mirror pairs with equal aggressiveness.
  std::map<std::tuple<double, double, double, double, int>, std::size_t> lookup;
  for (std::size_t n = 0; n < jobs.size(); ++n)
    lookup[{jobs[n].x0.agents[0].d, jobs[n].x0.agents[1].d, jobs[n].theta[0], jobs[n].theta[1],
            static_cast<int>(jobs[n].split)}] = n;
  for (std::size_t n = 0; n < jobs.size(); ++n) {
    const auto& job = jobs[n];
    if (job.theta[0] != job.theta[1] || summaries[n].symmetric_start || !summaries[n].converged)
      continue;
    auto it = lookup.find({job.x0.agents[1].d, job.x0.agents[0].d, job.theta[1], job.theta[0],
                           static_cast<int>(job.split)});
    if (it == lookup.end() || it->second <= n || !summaries[it->second].converged) continue;
    const auto& a = sampled[n];
    const auto b = SwapAgents(sampled[it->second]);
    SwapCheck check{static_cast<int>(n), static_cast<int>(it->second), 0.0, 0.0};
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (std::size_t j = 0; j < 2; ++j) {
        check.state_error = std::max({check.state_error,
                                      std::abs(a.states[k].agents[j].d - b.states[k].agents[j].d),
                                      std::abs(a.states[k].agents[j].v - b.states[k].agents[j].v)});
        check.value_error =
            std::max(check.value_error, std::abs(a.values[k][j] - b.values[k][j]) /
                                            (1.0 + std::abs(b.values[k][j])));
      }
    }
    ds.swap_checks.push_back(check);
  }

  ds.solves = std::move(summaries);
  if (ds.records.empty()) throw AllSolvesFailed("no equilibrium solve converged");
  return ds;
}

// --- Files --------------------------------------------------------------------

inline std::vector<std::string> DatasetColumns() {
  return {"traj",    "split",   "theta1",  "theta2",  "t",       "d1",      "v1",
          "d2",      "v2",      "V1",      "V2",      "lam1_d1", "lam1_v1", "lam1_d2",
          "lam1_v2", "lam2_d1", "lam2_v1", "lam2_d2", "lam2_v2"};
}

inline std::string DatasetToCsv(const ValueDataset& ds) {
  std::string out;
  AppendCsvRow(out, DatasetColumns());
  for (const auto& r : ds.records) {
    std::vector<std::string> row{std::to_string(r.trajectory),
                                 r.split == Split::kTrain ? "train" : "test",
                                 FormatDouble(r.theta[0]),
                                 FormatDouble(r.theta[1]),
                                 FormatDouble(r.x.t)};
    for (const auto& a : r.x.agents) {
      row.push_back(FormatDouble(a.d));
      row.push_back(FormatDouble(a.v));
    }
    for (double v : r.value) row.push_back(FormatDouble(v));
    for (const auto& c : r.costate)
      for (double v : c) row.push_back(FormatDouble(v));
    AppendCsvRow(out, row);
  }
  return out;
}

inline nlohmann::json DatasetManifest(const ValueDataset& ds) {
  using dataset_detail::StateJson;
  nlohmann::json solves = nlohmann::json::array();
  for (const auto& s : ds.solves) {
    nlohmann::json j = {{"id", s.id},
                        {"stem", s.stem},
                        {"x0", StateJson(s.x0)},
                        {"theta", s.theta},
                        {"split", s.split == Split::kTrain ? "train" : "test"},
                        {"converged", s.converged},
                        {"residual_norm", s.residual_norm},
                        {"mesh_nodes", s.mesh_nodes},
                        {"newton_iterations", s.newton_iterations},
                        {"symmetric_start", s.symmetric_start},
                        {"diagnostics", s.diagnostics}};
    if (!std::isfinite(s.residual_norm)) j["residual_norm"] = nullptr;
    if (s.converged) j["residuals"] = ResidualsToJson(s.residuals);
    solves.push_back(j);
  }
  nlohmann::json swaps = nlohmann::json::array();
  for (const auto& c : ds.swap_checks)
    swaps.push_back({{"solve", c.solve},
                     {"mirror", c.mirror},
                     {"state_error", c.state_error},
                     {"value_error", c.value_error}});
  return {{"version", kDatasetFormatVersion},
          {"config_hash", ds.config_hash},
          {"test_sample", {{"kind", "latin_hypercube"}, {"seed", ds.test_seed}}},
          {"records", ds.records.size()},
          {"solves", solves},
          {"swap_checks", swaps}};
}

inline void WriteDataset(const std::filesystem::path& stem, const ValueDataset& ds) {
  WriteFile(stem.string() + ".csv", DatasetToCsv(ds));
  WriteFile(stem.string() + ".json", DatasetManifest(ds).dump(2) + "\n");
}

inline ValueDataset ReadDataset(const std::filesystem::path& stem) {
  const auto meta = nlohmann::json::parse(ReadFile(stem.string() + ".json"));
  if (meta.value("version", 0) != kDatasetFormatVersion)
    throw IoError("unsupported dataset format version");
  ValueDataset ds;
  ds.config_hash = meta.at("config_hash").get<std::string>();
  ds.test_seed = meta.at("test_sample").at("seed").get<std::uint64_t>();
  for (const auto& j : meta.at("solves")) {
    SolveSummary s;
    s.id = j.at("id").get<int>();
    s.stem = j.at("stem").get<std::string>();
    const auto x0 = j.at("x0").get<std::array<double, 4>>();
    s.x0.agents[0] = {x0[0], x0[1]};
    s.x0.agents[1] = {x0[2], x0[3]};
    s.theta = j.at("theta").get<Thetas<2>>();
    s.split = j.at("split").get<std::string>() == "train" ? Split::kTrain : Split::kTest;
    s.converged = j.at("converged").get<bool>();
    s.residual_norm = j.at("residual_norm").is_null() ? std::numeric_limits<double>::infinity()
                                                      : j.at("residual_norm").get<double>();
    s.mesh_nodes = j.at("mesh_nodes").get<std::size_t>();
    s.newton_iterations = j.at("newton_iterations").get<int>();
    s.symmetric_start = j.at("symmetric_start").get<bool>();
    s.diagnostics = j.at("diagnostics").get<std::string>();
    if (j.contains("residuals")) s.residuals = dataset_detail::ResidualsFromJson(j.at("residuals"));
    ds.solves.push_back(s);
  }
  for (const auto& j : meta.at("swap_checks"))
    ds.swap_checks.push_back({j.at("solve").get<int>(), j.at("mirror").get<int>(),
                              j.at("state_error").get<double>(),
                              j.at("value_error").get<double>()});

  const auto table = ParseCsv(ReadFile(stem.string() + ".csv"));
  if (table.header != DatasetColumns()) throw IoError("unexpected dataset columns");
  for (const auto& row : table.rows) {
    ValueRecord r;
    r.trajectory = std::stoi(row[0]);
    if (row[1] != "train" && row[1] != "test") throw IoError("bad split tag '" + row[1] + "'");
    r.split = row[1] == "train" ? Split::kTrain : Split::kTest;
    r.theta = {ParseDouble(row[2]), ParseDouble(row[3])};
    r.x.t = ParseDouble(row[4]);
    r.x.agents[0] = {ParseDouble(row[5]), ParseDouble(row[6])};
    r.x.agents[1] = {ParseDouble(row[7]), ParseDouble(row[8])};
    r.value = {ParseDouble(row[9]), ParseDouble(row[10])};
    std::size_t c = 11;
    for (auto& lam : r.costate)
      for (auto& v : lam) v = ParseDouble(row[c++]);
    ds.records.push_back(r);
  }
  return ds;
}

}  // namespace empathy

#endif  // EMPATHY_DATASET_HPP_
