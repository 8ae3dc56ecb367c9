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

// Closed-loop interaction under incomplete information. Each step:
//   estimate -> act -> advance dynamics -> smooth belief -> Bayes update.
//
// Log files:
//   <stem>.csv   k, t, d1, v1, d2, v2, u1, u2, p00..p33 (belief used at step
//                k), est1, est2 (cell / fellow codes), theta_hat codes,
//                correct1, correct2, degenerate
//   <stem>.json  scenario echo, realized values, social value

#ifndef EMPATHY_SIM_HPP_
#define EMPATHY_SIM_HPP_

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "empathy/domain.hpp"
#include "empathy/estimation.hpp"
#include "empathy/io.hpp"
#include "empathy/planner.hpp"
#include "empathy/value_net.hpp"
#include "json.hpp"

namespace empathy {

inline constexpr int kLogFormatVersion = 1;

enum class EstimationType : int { kEmpathetic = 0, kNonEmpathetic = 1 };

inline const char* ShortName(EstimationType e) {
  return e == EstimationType::kEmpathetic ? "e" : "ne";
}

struct Scenario {
  JointState<2> x0;
  std::string prior_id = "na";  // "na", "a" or "custom"
  BeliefTable prior = PriorNonAggressive();
  JointParams truth{};  // theta*, lambda* per agent
  std::array<EstimationType, 2> estimation{EstimationType::kEmpathetic,
                                           EstimationType::kEmpathetic};
  GameConfig cfg;
};

inline BeliefTable PriorById(const std::string& id) {
  if (id == "na") return PriorNonAggressive();
  if (id == "a") return PriorAggressive();
  throw ConfigError("unknown prior id '" + id + "'");
}

struct StepRecord {
  JointState<2> x;
  Actions<2> u{};  // NaN on the final row
  BeliefTable belief{};
  // Empathetic: the shared joint cell. Non-empathetic: the fellow's
  // parameter index. -1 on the final row.
  std::array<int, 2> estimate{-1, -1};
  std::array<Thetas<2>, 2> theta_hat{};
  std::array<int, 2> correct{-1, -1};
  bool degenerate = false;  // the update after this step had no information
};

struct InteractionLog {
  Scenario scenario;
  std::vector<StepRecord> steps;
  std::array<double, 2> values{};  // realized per-agent value v_i(s)
  double social_value = 0.0;
};

inline double SocialValue(const std::array<double, 2>& values) { return values[0] + values[1]; }
inline double SocialValue(const InteractionLog& log) { return SocialValue(log.values); }

// Realized values under the true parameters: sum_k f_i dt + c_i(x(K)).
inline std::array<double, 2> RealizedValues(const std::vector<StepRecord>& steps,
                                            const JointParams& truth, const GameConfig& cfg) {
  const Thetas<2> theta{truth[0].theta(), truth[1].theta()};
  std::array<double, 2> v = TerminalReward(steps.back().x, cfg);
  for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
    const auto f = InstantaneousReward(steps[k].x, steps[k].u, theta, cfg);
    for (std::size_t i = 0; i < 2; ++i) v[i] += f[i] * cfg.dt;
  }
  return v;
}

// Correct iff the pair used for planning equals the true pair.
inline int PolicyCorrect(const Thetas<2>& theta_hat, const JointParams& truth) {
  return theta_hat[0] == truth[0].theta() && theta_hat[1] == truth[1].theta() ? 1 : 0;
}

inline std::vector<std::array<int, 2>> PolicyCorrectness(const InteractionLog& log) {
  std::vector<std::array<int, 2>> out;
  for (std::size_t k = 0; k + 1 < log.steps.size(); ++k)
    out.push_back({PolicyCorrect(log.steps[k].theta_hat[0], log.scenario.truth),
                   PolicyCorrect(log.steps[k].theta_hat[1], log.scenario.truth)});
  return out;
}

inline InteractionLog Simulate(const Scenario& s, const SurrogateSet& surrogates) {
  s.cfg.Validate();
  InteractionLog log;
  log.scenario = s;
  JointBelief belief = JointBelief::FromPrior(s.prior);
  JointState<2> x = s.x0;
  x.t = 0.0;
  Actions<2> u_prev{0.0, 0.0};
  const std::size_t steps = s.cfg.NumSteps();
  for (std::size_t k = 0; k < steps; ++k) {
    StepRecord rec;
    rec.x = x;
    rec.belief = belief.probs;
    const JointParams shared = EmpatheticEstimate(belief);
    for (std::size_t i = 0; i < 2; ++i) {
      const std::size_t j = 1 - i;
      Thetas<2> theta_hat{};
      theta_hat[i] = s.truth[i].theta();
      if (s.estimation[i] == EstimationType::kEmpathetic) {
        theta_hat[j] = shared[j].theta();
        rec.estimate[i] = static_cast<int>(CellIndex(shared[0], shared[1]));
      } else {
        const auto fellow = NonEmpatheticEstimate(belief, i, s.truth[i], s.cfg.epsilon);
        theta_hat[j] = fellow.theta();
        rec.estimate[i] = fellow.index();
      }
      rec.theta_hat[i] = theta_hat;
      rec.correct[i] = PolicyCorrect(theta_hat, s.truth);
    }
    for (std::size_t i = 0; i < 2; ++i)
      rec.u[i] = SelectAction(x, u_prev, rec.theta_hat[i], i, surrogates, s.cfg);
    const auto next = DynamicsStep(x, rec.u, s.cfg.dt);
    const auto smoothed = SmoothBelief(belief, s.cfg.epsilon);
    const auto update = UpdateBelief(smoothed, x, rec.u, u_prev, surrogates, s.cfg);
    rec.degenerate = update.degenerate;
    belief = update.belief;
    u_prev = rec.u;
    x = next;
    log.steps.push_back(rec);
  }
  StepRecord last;
  last.x = x;
  last.u = {std::nan(""), std::nan("")};
  last.belief = belief.probs;
  log.steps.push_back(last);
  log.values = RealizedValues(log.steps, s.truth, s.cfg);
  log.social_value = SocialValue(log.values);
  return log;
}

// --- Files ---------------------------------------------------------------------

inline std::vector<std::string> LogColumns() {
  std::vector<std::string> cols{"k", "t", "d1", "v1", "d2", "v2", "u1", "u2"};
  for (int r = 0; r < kParamsPerAgent; ++r)
    for (int c = 0; c < kParamsPerAgent; ++c)
      cols.push_back("p" + std::to_string(r) + std::to_string(c));
  for (const char* c : {"est1", "est2", "theta_hat1_1", "theta_hat1_2", "theta_hat2_1",
                        "theta_hat2_2", "correct1", "correct2", "degenerate"})
    cols.push_back(c);
  return cols;
}

inline std::string LogToCsv(const InteractionLog& log) {
  std::string out;
  AppendCsvRow(out, LogColumns());
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const auto& s = log.steps[k];
    std::vector<std::string> row{std::to_string(k), FormatDouble(s.x.t)};
    for (const auto& a : s.x.agents) {
      row.push_back(FormatDouble(a.d));
      row.push_back(FormatDouble(a.v));
    }
    for (double u : s.u) row.push_back(FormatDouble(u));
    for (double p : s.belief) row.push_back(FormatDouble(p));
    for (int e : s.estimate) row.push_back(std::to_string(e));
    for (const auto& th : s.theta_hat)
      for (double t : th) row.push_back(FormatDouble(t));
    for (int c : s.correct) row.push_back(std::to_string(c));
    row.push_back(s.degenerate ? "1" : "0");
    AppendCsvRow(out, row);
  }
  return out;
}

inline nlohmann::json ScenarioToJson(const Scenario& s) {
  return {{"x0", {s.x0.agents[0].d, s.x0.agents[0].v, s.x0.agents[1].d, s.x0.agents[1].v}},
          {"prior_id", s.prior_id},
          {"prior", s.prior},
          {"truth", {s.truth[0].name(), s.truth[1].name()}},
          {"truth_index", {s.truth[0].index(), s.truth[1].index()}},
          {"estimation", {ShortName(s.estimation[0]), ShortName(s.estimation[1])}},
          {"config_hash", ConfigHash(s.cfg)}};
}

inline nlohmann::json LogSummary(const InteractionLog& log) {
  return {{"version", kLogFormatVersion},
          {"scenario", ScenarioToJson(log.scenario)},
          {"values", log.values},
          {"social_value", log.social_value},
          {"steps", log.steps.size()}};
}

inline void WriteLog(const std::filesystem::path& stem, const InteractionLog& log) {
  WriteFile(stem.string() + ".csv", LogToCsv(log));
  WriteFile(stem.string() + ".json", LogSummary(log).dump(2) + "\n");
}

inline Scenario ScenarioFromJson(const nlohmann::json& j, const GameConfig& cfg) {
  Scenario s;
  s.cfg = cfg;
  const auto x0 = j.at("x0").get<std::vector<double>>();
  if (x0.size() == 2) {
    s.x0.agents[0] = {x0[0], cfg.reference_velocity};
    s.x0.agents[1] = {x0[1], cfg.reference_velocity};
  } else if (x0.size() == 4) {
    s.x0.agents[0] = {x0[0], x0[1]};
    s.x0.agents[1] = {x0[2], x0[3]};
  } else {
    throw ConfigError("x0 must list (d1, d2) or (d1, v1, d2, v2)");
  }
  s.prior_id = j.value("prior_id", std::string("na"));
  if (s.prior_id == "custom") {
    s.prior = j.at("prior").get<BeliefTable>();
  } else {
    s.prior = PriorById(s.prior_id);
  }
  if (j.contains("truth_index")) {
    const auto t = j.at("truth_index").get<std::array<int, 2>>();
    s.truth = {AgentParams::FromIndex(t[0]), AgentParams::FromIndex(t[1])};
  } else {
    auto parse = [](const std::string& name) {
      for (int k = 0; k < kParamsPerAgent; ++k)
        if (AgentParams::FromIndex(k).name() == name) return AgentParams::FromIndex(k);
      throw ConfigError("unknown agent parameters '" + name + "'");
    };
    const auto t = j.at("truth").get<std::array<std::string, 2>>();
    s.truth = {parse(t[0]), parse(t[1])};
  }
  const auto e = j.at("estimation").get<std::array<std::string, 2>>();
  for (std::size_t i = 0; i < 2; ++i) {
    if (e[i] == "e") s.estimation[i] = EstimationType::kEmpathetic;
    else if (e[i] == "ne") s.estimation[i] = EstimationType::kNonEmpathetic;
    else throw ConfigError("estimation type must be 'e' or 'ne'");
  }
  JointBelief::FromPrior(s.prior);
  return s;
}

inline InteractionLog LogFromCsv(const std::string& csv, const Scenario& scenario) {
  const auto table = ParseCsv(csv);
  if (table.header != LogColumns()) throw IoError("unexpected log columns");
  InteractionLog log;
  log.scenario = scenario;
  for (const auto& row : table.rows) {
    StepRecord s;
    std::size_t c = 1;
    auto num = [&] { return ParseDouble(row[c++]); };
    s.x.t = num();
    for (auto& a : s.x.agents) {
      a.d = num();
      a.v = num();
    }
    for (auto& u : s.u) u = num();
    for (auto& p : s.belief) p = num();
    for (auto& e : s.estimate) e = std::stoi(row[c++]);
    for (auto& th : s.theta_hat)
      for (auto& t : th) t = num();
    for (auto& f : s.correct) f = std::stoi(row[c++]);
    s.degenerate = row[c++] == "1";
    log.steps.push_back(s);
  }
  if (log.steps.empty()) throw IoError("empty interaction log");
  log.values = RealizedValues(log.steps, scenario.truth, scenario.cfg);
  log.social_value = SocialValue(log.values);
  return log;
}

}  // namespace empathy

#endif  // EMPATHY_SIM_HPP_
