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

// Sweeps over initial states, true parameters, priors and estimation types,
// plus the hypothesis reports and policy-map exports computed from the logs.
//
// Hypothesis 1 (mismatched belief): X0' = {x0 : sv_e > sv_ne + tau} must be
// nonempty. Hypothesis 2 (matched belief): X0' nonempty, or the empathetic
// social value is within `not_worse_tolerance` of the non-empathetic one on
// at least `not_worse_fraction` of the mesh.

#ifndef EMPATHY_EXPERIMENTS_HPP_
#define EMPATHY_EXPERIMENTS_HPP_

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "empathy/dataset.hpp"
#include "empathy/io.hpp"
#include "empathy/parallel.hpp"
#include "empathy/sim.hpp"
#include "json.hpp"

namespace empathy {

inline constexpr int kReportFormatVersion = 1;

class MissingCounterpart : public Error {
 public:
  using Error::Error;
};

class SweepFailure : public Error {
 public:
  using Error::Error;
};

struct SweepSpec {
  std::vector<JointState<2>> x0_set;
  std::vector<Aggressiveness> theta_cases{Aggressiveness::kAggressive,
                                          Aggressiveness::kNonAggressive};
  std::vector<std::string> priors{"na", "a"};
  std::vector<EstimationType> est_types{EstimationType::kEmpathetic,
                                        EstimationType::kNonEmpathetic};
  Rationality true_rationality = Rationality::kLessNoisy;

  void Validate() const {
    if (x0_set.empty() || theta_cases.empty() || priors.empty() || est_types.empty())
      throw ConfigError("every sweep axis must be nonempty");
    for (const auto& p : priors) PriorById(p);
  }
};

inline SweepSpec DefaultSweepSpec(const GameConfig& cfg, double spacing = 0.5) {
  SweepSpec spec;
  spec.x0_set = GridInitialStates(cfg, 15.0, 20.0, spacing);
  return spec;
}

inline std::string ScenarioId(Aggressiveness theta_case, const std::string& prior,
                              EstimationType est, std::size_t x0_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", x0_index);
  return std::string("case_") + ShortName(theta_case) + "_prior_" + prior + "_" +
         ShortName(est) + "_" + buf;
}

struct SweepEntry {
  std::string id;
  std::size_t x0_index = 0;
  Aggressiveness theta_case = Aggressiveness::kAggressive;
  std::string prior;
  EstimationType est = EstimationType::kEmpathetic;
  InteractionLog log;
};

inline std::vector<Scenario> SweepScenarios(const SweepSpec& spec, const GameConfig& cfg,
                                            std::vector<SweepEntry>* entries) {
  spec.Validate();
  std::vector<Scenario> out;
  for (auto theta_case : spec.theta_cases)
    for (const auto& prior : spec.priors)
      for (auto est : spec.est_types)
        for (std::size_t k = 0; k < spec.x0_set.size(); ++k) {
          Scenario s;
          s.x0 = spec.x0_set[k];
          s.prior_id = prior;
          s.prior = PriorById(prior);
          const AgentParams truth{theta_case, spec.true_rationality};
          s.truth = {truth, truth};
          s.estimation = {est, est};
          s.cfg = cfg;
          out.push_back(s);
          SweepEntry e;
          e.id = ScenarioId(theta_case, prior, est, k);
          e.x0_index = k;
          e.theta_case = theta_case;
          e.prior = prior;
          e.est = est;
          entries->push_back(e);
        }
  return out;
}

// One log per scenario, in sweep order. Logs are written to `log_dir` when set.
inline std::vector<SweepEntry> RunSweep(
    const SweepSpec& spec, const GameConfig& cfg, const SurrogateSet& surrogates,
    std::size_t jobs = 1, const std::optional<std::filesystem::path>& log_dir = std::nullopt,
    const std::function<void(const SweepEntry&, std::size_t, std::size_t)>& progress = {}) {
  std::vector<SweepEntry> entries;
  const auto scenarios = SweepScenarios(spec, cfg, &entries);
  std::vector<std::string> errors(scenarios.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  ParallelFor(scenarios.size(), jobs, [&](std::size_t n) {
    try {
      entries[n].log = Simulate(scenarios[n], surrogates);
      if (log_dir) WriteLog(*log_dir / entries[n].id, entries[n].log);
    } catch (const std::exception& e) {
      errors[n] = e.what();
    }
    const std::size_t count = ++done;
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(entries[n], count, scenarios.size());
    }
  });
  std::string failures;
  std::size_t failed = 0;
  for (std::size_t n = 0; n < errors.size(); ++n)
    if (!errors[n].empty()) {
      if (failed++ < 5) failures += "\n  " + entries[n].id + ": " + errors[n];
    }
  if (failed)
    throw SweepFailure(std::to_string(failed) + " of " + std::to_string(entries.size()) +
                       " scenarios failed:" + failures);
  return entries;
}

// --- Hypothesis reports -----------------------------------------------------------

struct ReportOptions {
  double tau = 1e-6;
  double not_worse_tolerance = 0.01;  // relative to |sv_ne|
  double not_worse_fraction = 0.95;
};

struct PointComparison {
  std::size_t x0_index = 0;
  JointState<2> x0;
  double social_empathetic = 0.0;
  double social_nonempathetic = 0.0;
  bool winner = false;     // in X0'
  bool not_worse = false;  // sv_e >= sv_ne - tol |sv_ne|
  bool symmetric = false;  // d1 == d2 at the start
};

struct CellReport {
  Aggressiveness theta_case = Aggressiveness::kAggressive;
  std::string prior;
  bool matched = false;  // prior favours the true aggressiveness
  std::vector<PointComparison> points;
  std::size_t winners = 0;
  double mean_difference = 0.0;  // mean of sv_e - sv_ne
  double mean_difference_asymmetric = 0.0;
  double not_worse_fraction = 0.0;
  bool pass = false;
};

struct HypothesisReport {
  int hypothesis = 1;
  std::vector<CellReport> cells;
  bool pass = false;  // every cell passes
};

inline bool PriorMatches(Aggressiveness theta_case, const std::string& prior) {
  return (theta_case == Aggressiveness::kAggressive) == (prior == "a");
}

namespace report_detail {

inline CellReport CompareCell(const std::vector<SweepEntry>& entries, Aggressiveness theta_case,
                              const std::string& prior, const ReportOptions& opts) {
  CellReport cell;
  cell.theta_case = theta_case;
  cell.prior = prior;
  cell.matched = PriorMatches(theta_case, prior);
  std::map<std::size_t, std::array<const SweepEntry*, 2>> pairs;
  for (const auto& e : entries) {
    if (e.theta_case != theta_case || e.prior != prior) continue;
    auto& slot = pairs[e.x0_index][static_cast<std::size_t>(e.est)];
    if (slot) throw Error("duplicate log for " + e.id);
    slot = &e;
  }
  if (pairs.empty())
    throw MissingCounterpart(std::string("no logs for case ") + ShortName(theta_case) +
                             ", prior " + prior);
  double sum = 0.0, sum_asym = 0.0;
  std::size_t n_asym = 0, not_worse = 0;
  for (const auto& [index, pair] : pairs) {
    if (!pair[0] || !pair[1])
      throw MissingCounterpart("missing estimation-type counterpart for x0 index " +
                               std::to_string(index));
    PointComparison p;
    p.x0_index = index;
    p.x0 = pair[0]->log.scenario.x0;
    p.social_empathetic = pair[0]->log.social_value;
    p.social_nonempathetic = pair[1]->log.social_value;
    const double diff = p.social_empathetic - p.social_nonempathetic;
    p.winner = diff > opts.tau;
    p.not_worse = diff >= -opts.not_worse_tolerance * std::abs(p.social_nonempathetic);
    p.symmetric = p.x0.agents[0] == p.x0.agents[1];
    cell.winners += p.winner;
    not_worse += p.not_worse;
    sum += diff;
    if (!p.symmetric) {
      sum_asym += diff;
      ++n_asym;
    }
    cell.points.push_back(p);
  }
  cell.mean_difference = sum / static_cast<double>(cell.points.size());
  cell.mean_difference_asymmetric = n_asym ? sum_asym / static_cast<double>(n_asym) : 0.0;
  cell.not_worse_fraction = static_cast<double>(not_worse) / static_cast<double>(cell.points.size());
  return cell;
}

inline std::vector<std::pair<Aggressiveness, std::string>> Cells(
    const std::vector<SweepEntry>& entries, bool matched) {
  std::vector<std::pair<Aggressiveness, std::string>> cells;
  for (const auto& e : entries) {
    if (PriorMatches(e.theta_case, e.prior) != matched) continue;
    std::pair<Aggressiveness, std::string> key{e.theta_case, e.prior};
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

}  // namespace report_detail

inline HypothesisReport Hypothesis1Report(const std::vector<SweepEntry>& entries,
                                          const ReportOptions& opts = {}) {
  HypothesisReport r;
  r.hypothesis = 1;
  for (const auto& [theta_case, prior] : report_detail::Cells(entries, false)) {
    auto cell = report_detail::CompareCell(entries, theta_case, prior, opts);
    cell.pass = cell.winners > 0;
    r.cells.push_back(cell);
  }
  if (r.cells.empty()) throw MissingCounterpart("no mismatched-belief cells in the logs");
  r.pass = std::all_of(r.cells.begin(), r.cells.end(), [](const auto& c) { return c.pass; });
  return r;
}

inline HypothesisReport Hypothesis2Report(const std::vector<SweepEntry>& entries,
                                          const ReportOptions& opts = {}) {
  HypothesisReport r;
  r.hypothesis = 2;
  for (const auto& [theta_case, prior] : report_detail::Cells(entries, true)) {
    auto cell = report_detail::CompareCell(entries, theta_case, prior, opts);
    cell.pass = cell.winners > 0 || cell.not_worse_fraction >= opts.not_worse_fraction;
    r.cells.push_back(cell);
  }
  if (r.cells.empty()) throw MissingCounterpart("no matched-belief cells in the logs");
  r.pass = std::all_of(r.cells.begin(), r.cells.end(), [](const auto& c) { return c.pass; });
  return r;
}

// --- Policy maps --------------------------------------------------------------------

struct PolicyRates {
  std::size_t steps = 0;
  std::size_t correct = 0;
  std::size_t trailing_steps = 0;
  std::size_t trailing_correct = 0;
  std::size_t leading_steps = 0;
  std::size_t leading_correct = 0;

  static double Rate(std::size_t num, std::size_t den) {
    return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  }
  double rate() const { return Rate(correct, steps); }
  double trailing_rate() const { return Rate(trailing_correct, trailing_steps); }
  double leading_rate() const { return Rate(leading_correct, leading_steps); }
};

// Agent i trails at a step when it is strictly behind the other car.
inline PolicyRates PolicyRatesFor(const std::vector<SweepEntry>& entries, Aggressiveness theta_case,
                                  const std::string& prior, EstimationType est) {
  PolicyRates r;
  for (const auto& e : entries) {
    if (e.theta_case != theta_case || e.prior != prior || e.est != est) continue;
    const auto flags = PolicyCorrectness(e.log);
    for (std::size_t k = 0; k < flags.size(); ++k) {
      const auto& x = e.log.steps[k].x;
      for (std::size_t i = 0; i < 2; ++i) {
        const double own = x.agents[i].d, other = x.agents[1 - i].d;
        const auto c = static_cast<std::size_t>(flags[k][i]);
        ++r.steps;
        r.correct += c;
        if (own < other) {
          ++r.trailing_steps;
          r.trailing_correct += c;
        } else if (own > other) {
          ++r.leading_steps;
          r.leading_correct += c;
        }
      }
    }
  }
  return r;
}

// Long-format per-step rows: id, case, prior, type, x0, step state and flags.
inline std::string PolicyMapCsv(const std::vector<SweepEntry>& entries) {
  std::string out;
  AppendCsvRow(out, {"id", "case", "prior", "type", "x0_d1", "x0_d2", "k", "t", "d1", "d2",
                     "correct1", "correct2"});
  for (const auto& e : entries) {
    const auto flags = PolicyCorrectness(e.log);
    for (std::size_t k = 0; k < flags.size(); ++k) {
      const auto& x = e.log.steps[k].x;
      AppendCsvRow(out, {e.id, ShortName(e.theta_case), e.prior, ShortName(e.est),
                         FormatDouble(e.log.scenario.x0.agents[0].d),
                         FormatDouble(e.log.scenario.x0.agents[1].d), std::to_string(k),
                         FormatDouble(x.t), FormatDouble(x.agents[0].d),
                         FormatDouble(x.agents[1].d), std::to_string(flags[k][0]),
                         std::to_string(flags[k][1])});
    }
  }
  return out;
}

// One row per scenario: x0, case, prior, type, social value, mean flags.
inline std::string OutcomesCsv(const std::vector<SweepEntry>& entries) {
  std::string out;
  AppendCsvRow(out, {"id", "x0_d1", "x0_d2", "case", "prior", "type", "v1", "v2", "social_value",
                     "correct_rate1", "correct_rate2", "symmetric"});
  for (const auto& e : entries) {
    const auto flags = PolicyCorrectness(e.log);
    std::array<double, 2> rate{};
    for (const auto& f : flags)
      for (std::size_t i = 0; i < 2; ++i) rate[i] += f[i];
    for (auto& r : rate) r = flags.empty() ? 0.0 : r / static_cast<double>(flags.size());
    const auto& x0 = e.log.scenario.x0;
    AppendCsvRow(out, {e.id, FormatDouble(x0.agents[0].d), FormatDouble(x0.agents[1].d),
                       ShortName(e.theta_case), e.prior, ShortName(e.est),
                       FormatDouble(e.log.values[0]), FormatDouble(e.log.values[1]),
                       FormatDouble(e.log.social_value), FormatDouble(rate[0]),
                       FormatDouble(rate[1]), x0.agents[0] == x0.agents[1] ? "1" : "0"});
  }
  return out;
}

// --- Report files ---------------------------------------------------------------------

inline nlohmann::json CellToJson(const CellReport& c) {
  nlohmann::json winners = nlohmann::json::array();
  for (const auto& p : c.points)
    if (p.winner) winners.push_back({p.x0.agents[0].d, p.x0.agents[1].d});
  return {{"case", ShortName(c.theta_case)},
          {"prior", c.prior},
          {"matched", c.matched},
          {"points", c.points.size()},
          {"winners", c.winners},
          {"winner_fraction", static_cast<double>(c.winners) / static_cast<double>(c.points.size())},
          {"mean_difference", c.mean_difference},
          {"mean_difference_asymmetric", c.mean_difference_asymmetric},
          {"not_worse_fraction", c.not_worse_fraction},
          {"winning_set", winners},
          {"pass", c.pass}};
}

inline nlohmann::json HypothesisToJson(const HypothesisReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) cells.push_back(CellToJson(c));
  return {{"hypothesis", r.hypothesis}, {"pass", r.pass}, {"cells", cells}};
}

inline std::string LogDigest(const InteractionLog& log) {
  return HexDigest(Fnv1a(LogToCsv(log)));
}

// Full report: hypotheses, policy rates per cell and type, log digests. The
// "digest" field hashes everything else in the report.
inline nlohmann::json BuildReport(const std::vector<SweepEntry>& entries,
                                  const ReportOptions& opts = {}) {
  nlohmann::json report = {{"version", kReportFormatVersion},
                           {"tolerances",
                            {{"tau", opts.tau},
                             {"not_worse_tolerance", opts.not_worse_tolerance},
                             {"not_worse_fraction", opts.not_worse_fraction}}},
                           {"scenarios", entries.size()}};
  report["hypothesis1"] = HypothesisToJson(Hypothesis1Report(entries, opts));
  report["hypothesis2"] = HypothesisToJson(Hypothesis2Report(entries, opts));
  nlohmann::json policy = nlohmann::json::array();
  std::vector<std::tuple<Aggressiveness, std::string, EstimationType>> keys;
  for (const auto& e : entries) {
    auto key = std::make_tuple(e.theta_case, e.prior, e.est);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  for (const auto& [theta_case, prior, est] : keys) {
    const auto r = PolicyRatesFor(entries, theta_case, prior, est);
    policy.push_back({{"case", ShortName(theta_case)},
                      {"prior", prior},
                      {"type", ShortName(est)},
                      {"matched", PriorMatches(theta_case, prior)},
                      {"correct_rate", r.rate()},
                      {"trailing_correct_rate", r.trailing_rate()},
                      {"leading_correct_rate", r.leading_rate()},
                      {"steps", r.steps}});
  }
  report["policy"] = policy;
  std::string all;
  nlohmann::json digests = nlohmann::json::object();
  for (const auto& e : entries) {
    const auto d = LogDigest(e.log);
    digests[e.id] = d;
    all += d;
  }
  report["log_digests"] = digests;
  report["logs_digest"] = HexDigest(Fnv1a(all));
  report["digest"] = HexDigest(Fnv1a(report.dump()));
  return report;
}

inline void WriteReport(const std::filesystem::path& dir, const std::vector<SweepEntry>& entries,
                        const ReportOptions& opts = {}) {
  const auto report = BuildReport(entries, opts);
  WriteFile(dir / "report.json", report.dump(2) + "\n");
  WriteFile(dir / "outcomes.csv", OutcomesCsv(entries));
  WriteFile(dir / "policy_map.csv", PolicyMapCsv(entries));
}

// Rebuilds sweep entries from persisted logs for the given spec.
inline std::vector<SweepEntry> LoadSweep(const SweepSpec& spec, const GameConfig& cfg,
                                         const std::filesystem::path& log_dir) {
  std::vector<SweepEntry> entries;
  const auto scenarios = SweepScenarios(spec, cfg, &entries);
  for (std::size_t n = 0; n < entries.size(); ++n) {
    const auto stem = log_dir / entries[n].id;
    const auto meta = nlohmann::json::parse(ReadFile(stem.string() + ".json"));
    if (meta.at("scenario").at("config_hash").get<std::string>() != ConfigHash(cfg))
      throw ConfigError("log " + entries[n].id + " was produced with a different config");
    entries[n].log = LogFromCsv(ReadFile(stem.string() + ".csv"), scenarios[n]);
  }
  return entries;
}

}  // namespace empathy

#endif  // EMPATHY_EXPERIMENTS_HPP_
