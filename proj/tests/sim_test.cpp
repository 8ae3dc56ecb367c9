#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "empathy/sim.hpp"
#include "lq_oracle.hpp"

namespace empathy {
namespace {

JointState<2> Start(double d1, double v1, double d2, double v2) {
  JointState<2> x;
  x.agents[0] = {d1, v1};
  x.agents[1] = {d2, v2};
  return x;
}

// Random surrogates with realistic normalization: enough structure for the
// belief to move.
SurrogateSet RandomSet(const GameConfig& cfg) {
  SurrogateSet set;
  std::uint64_t seed = 100;
  for (double a : {1.0, 5.0})
    for (double b : {1.0, 5.0}) {
      auto net = ValueSurrogate::Random({a, b}, seed++);
      net.zone_exit = cfg.ZoneExit();
      net.input_offset = {35.0, 17.0, 35.0, 17.0, 1.5};
      net.input_scale = {1.0 / 20, 1.0 / 5, 1.0 / 20, 1.0 / 5, 1.0 / 1.5};
      net.output_scale = 40.0;
      set.Add(net);
    }
  return set;
}

SurrogateSet ZeroSet() {
  SurrogateSet set;
  for (double a : {1.0, 5.0})
    for (double b : {1.0, 5.0}) set.Add(ValueSurrogate::Zero({a, b}));
  return set;
}

Scenario MakeScenario(EstimationType e, const std::string& prior = "a") {
  Scenario s;
  s.x0 = Start(15.0, 18.0, 16.5, 18.0);
  s.prior_id = prior;
  s.prior = PriorById(prior);
  s.truth = {AgentParams::FromIndex(3), AgentParams::FromIndex(3)};
  s.estimation = {e, e};
  return s;
}

TEST(Simulate, ZeroHorizonGivesTerminalRewardOnly) {
  auto s = MakeScenario(EstimationType::kEmpathetic);
  s.cfg.horizon = 0.0;
  const auto log = Simulate(s, ZeroSet());
  ASSERT_EQ(log.steps.size(), 1u);
  EXPECT_EQ(log.values, TerminalReward(s.x0, s.cfg));
  EXPECT_EQ(log.social_value, log.values[0] + log.values[1]);
}

TEST(Simulate, LengthContinuityAndBeliefInvariants) {
  GameConfig cfg;
  const auto set = RandomSet(cfg);
  for (auto e : {EstimationType::kEmpathetic, EstimationType::kNonEmpathetic}) {
    const auto s = MakeScenario(e);
    const auto log = Simulate(s, set);
    ASSERT_EQ(log.steps.size(), 61u);
    double min_prior = 1.0;
    for (double p : s.prior) min_prior = std::min(min_prior, p);
    for (std::size_t k = 0; k < log.steps.size(); ++k) {
      const auto& st = log.steps[k];
      double sum = 0.0;
      for (double p : st.belief) sum += p;
      EXPECT_NEAR(sum, 1.0, 1e-12);
      JointBelief bel = JointBelief::FromPrior(s.prior);
      bel.probs = st.belief;
      for (double p : SmoothBelief(bel, s.cfg.epsilon).probs)
        EXPECT_GE(p, s.cfg.epsilon * min_prior * (1 - 1e-12));
      if (k + 1 < log.steps.size()) {
        EXPECT_EQ(log.steps[k + 1].x, DynamicsStep(st.x, st.u, s.cfg.dt));
        for (double u : st.u) {
          EXPECT_GE(u, -5.0);
          EXPECT_LE(u, 10.0);
          EXPECT_EQ(u, s.cfg.ActionGrid()[SnapToGrid(u, s.cfg)]);
        }
      } else {
        EXPECT_TRUE(std::isnan(st.u[0]));
      }
    }
  }
}

TEST(Simulate, DeterministicAcrossRuns) {
  GameConfig cfg;
  const auto set = RandomSet(cfg);
  const auto s = MakeScenario(EstimationType::kNonEmpathetic, "na");
  EXPECT_EQ(LogToCsv(Simulate(s, set)), LogToCsv(Simulate(s, set)));
}

TEST(Simulate, EstimatesWireIntoPlanningPairs) {
  GameConfig cfg;
  const auto set = RandomSet(cfg);
  for (auto e : {EstimationType::kEmpathetic, EstimationType::kNonEmpathetic}) {
    auto s = MakeScenario(e);
    s.truth = {AgentParams::FromIndex(1), AgentParams::FromIndex(2)};
    const auto log = Simulate(s, set);
    for (std::size_t k = 0; k + 1 < log.steps.size(); ++k) {
      const auto& st = log.steps[k];
      JointBelief bel = JointBelief::FromPrior(s.prior);
      bel.probs = st.belief;
      for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t j = 1 - i;
        EXPECT_EQ(st.theta_hat[i][i], s.truth[i].theta());
        const double fellow = e == EstimationType::kEmpathetic
                                  ? EmpatheticEstimate(bel)[j].theta()
                                  : NonEmpatheticEstimate(bel, i, s.truth[i]).theta();
        EXPECT_EQ(st.theta_hat[i][j], fellow);
        EXPECT_EQ(st.correct[i], PolicyCorrect(st.theta_hat[i], s.truth));
        const double u = SelectAction(st.x, k ? log.steps[k - 1].u : Actions<2>{0, 0},
                                      st.theta_hat[i], i, set, s.cfg);
        EXPECT_EQ(st.u[i], u);
      }
    }
  }
}

TEST(Simulate, SwapSymmetricScenarioGivesSwappedLog) {
  const auto set = ZeroSet();
  auto s = MakeScenario(EstimationType::kEmpathetic);
  s.x0 = Start(16.0, 18.0, 16.0, 18.0);
  const auto log = Simulate(s, set);
  for (const auto& st : log.steps) {
    EXPECT_EQ(st.x.agents[0], st.x.agents[1]);
    if (!std::isnan(st.u[0])) EXPECT_EQ(st.u[0], st.u[1]);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(st.belief[4 * r + c], st.belief[4 * c + r]);
  }
}

TEST(Simulate, DecoupledGameApproachesAnalyticOptimum) {
  GameConfig cfg;
  cfg.collision_penalty = 0.0;
  cfg.epsilon = 0.0;
  TrainOptions opts;
  opts.epochs = 300;
  opts.batch_size = 64;
  const auto net = Train(testing_lq::DecoupledRecords(cfg, {5.0, 5.0}), {5.0, 5.0}, cfg, opts);
  SurrogateSet set;
  for (double a : {1.0, 5.0})
    for (double b : {1.0, 5.0}) {
      auto copy = net;
      copy.theta = {a, b};
      set.Add(copy);
    }
  Scenario s;
  s.cfg = cfg;
  // Optimal controls 0.5 and -0.5 lie on the action grid.
  s.x0 = Start(17.0, 16.0, 18.5, 20.0);
  s.truth = {AgentParams::FromIndex(3), AgentParams::FromIndex(3)};
  s.prior_id = "custom";
  s.prior.fill(1e-9);
  s.prior[CellIndex(s.truth[0], s.truth[1])] = 1.0 - 15e-9;
  const auto log = Simulate(s, set);
  double optimum = 0.0;
  for (std::size_t i = 0; i < 2; ++i) optimum += testing_lq::Solve(s.x0.agents[i], cfg).Value(0.0);
  EXPECT_NEAR(log.social_value, optimum, 0.05 * std::abs(optimum));
  EXPECT_LE(log.social_value, optimum + 1e-9);
}

TEST(SocialValue, Examples) {
  EXPECT_EQ(SocialValue(std::array<double, 2>{2.0, 3.0}), 5.0);
  EXPECT_EQ(SocialValue(std::array<double, 2>{0.0, 0.0}), 0.0);
}

TEST(RealizedValues, IndependentQuadratureOfLog) {
  GameConfig cfg;
  const auto set = RandomSet(cfg);
  auto s = MakeScenario(EstimationType::kEmpathetic);
  s.truth = {AgentParams::FromIndex(0), AgentParams::FromIndex(2)};
  const auto log = Simulate(s, set);
  double total = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double theta = s.truth[i].theta();
    double v = 0.0;
    for (std::size_t k = 0; k + 1 < log.steps.size(); ++k) {
      const auto& x = log.steps[k].x;
      const double u = log.steps[k].u[i];
      const double g1 = EntrySigmoid(x.agents[0].d, theta, cfg) * ExitSigmoid(x.agents[0].d, cfg);
      const double g2 = EntrySigmoid(x.agents[1].d, theta, cfg) * ExitSigmoid(x.agents[1].d, cfg);
      v += (-u * u - cfg.collision_penalty * g1 * g2) * cfg.dt;
    }
    const auto& last = log.steps.back().x.agents[i];
    v += cfg.progress_weight * last.d - std::pow(last.v - cfg.reference_velocity, 2);
    EXPECT_NEAR(v, log.values[i], 1e-10 * (1 + std::abs(v)));
    total += v;
  }
  EXPECT_NEAR(total, log.social_value, 1e-10 * (1 + std::abs(total)));
}

TEST(PolicyCorrect, Examples) {
  const JointParams truth{AgentParams::FromIndex(2), AgentParams::FromIndex(3)};
  EXPECT_EQ(PolicyCorrect({5.0, 5.0}, truth), 1);
  EXPECT_EQ(PolicyCorrect({5.0, 1.0}, truth), 0);
  EXPECT_EQ(PolicyCorrect({1.0, 5.0}, truth), 0);
}

TEST(PolicyCorrectness, SharedEstimateFlagsAgreeWhenBothEgosCorrect) {
  GameConfig cfg;
  const auto set = RandomSet(cfg);
  const auto log = Simulate(MakeScenario(EstimationType::kEmpathetic), set);
  const auto flags = PolicyCorrectness(log);
  ASSERT_EQ(flags.size(), 60u);
  for (std::size_t k = 0; k < flags.size(); ++k) {
    EXPECT_EQ(flags[k][0], log.steps[k].correct[0]);
    EXPECT_EQ(flags[k][1], log.steps[k].correct[1]);
    // Truth is symmetric, so the shared cell makes both flags identical.
    EXPECT_EQ(flags[k][0], flags[k][1]);
  }
}

TEST(LogFiles, CsvRoundTripReproducesValues) {
  GameConfig cfg;
  const auto set = RandomSet(cfg);
  const auto s = MakeScenario(EstimationType::kNonEmpathetic);
  const auto log = Simulate(s, set);
  const auto dir = std::filesystem::temp_directory_path() / "empathy_sim_test";
  std::filesystem::remove_all(dir);
  WriteLog(dir / "run", log);
  const auto summary = nlohmann::json::parse(ReadFile(dir / "run.json"));
  const auto scenario = ScenarioFromJson(summary.at("scenario"), cfg);
  EXPECT_EQ(scenario.x0, s.x0);
  EXPECT_EQ(scenario.truth, s.truth);
  EXPECT_EQ(scenario.estimation, s.estimation);
  const auto back = LogFromCsv(ReadFile(dir / "run.csv"), scenario);
  EXPECT_EQ(back.values, log.values);
  EXPECT_EQ(back.social_value, log.social_value);
  EXPECT_EQ(LogToCsv(back), LogToCsv(log));
  EXPECT_EQ(summary.at("social_value").get<double>(), log.social_value);
}

TEST(ScenarioFromJson, AcceptsShortFormsAndRejectsBadInput) {
  GameConfig cfg;
  auto s = ScenarioFromJson(
      nlohmann::json::parse(R"j({"x0": [15, 17.5], "prior_id": "na", "truth": ["(a,ln)", "(na,n)"],
                                "estimation": ["e", "ne"]})j"),
      cfg);
  EXPECT_EQ(s.x0.agents[1].d, 17.5);
  EXPECT_EQ(s.x0.agents[1].v, 18.0);
  EXPECT_EQ(s.truth[0].index(), 1);
  EXPECT_EQ(s.truth[1].index(), 2);
  EXPECT_EQ(s.estimation[1], EstimationType::kNonEmpathetic);
  EXPECT_THROW(ScenarioFromJson(nlohmann::json::parse(R"j({"x0": [1, 2, 3], "truth_index": [0, 0],
      "estimation": ["e", "e"]})j"), cfg), ConfigError);
  EXPECT_THROW(ScenarioFromJson(nlohmann::json::parse(R"j({"x0": [15, 16], "prior_id": "zz",
      "truth_index": [0, 0], "estimation": ["e", "e"]})j"), cfg), ConfigError);
  EXPECT_THROW(ScenarioFromJson(nlohmann::json::parse(R"j({"x0": [15, 16], "truth": ["x", "y"],
      "estimation": ["e", "e"]})j"), cfg), ConfigError);
}

}  // namespace
}  // namespace empathy
