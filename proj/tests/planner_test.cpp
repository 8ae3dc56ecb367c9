#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "empathy/planner.hpp"

namespace empathy {
namespace {

JointState<2> State(double d1, double v1, double d2, double v2, double t) {
  JointState<2> x;
  x.agents[0] = {d1, v1};
  x.agents[1] = {d2, v2};
  x.t = t;
  return x;
}

SurrogateSet ZeroSet() {
  SurrogateSet set;
  for (double a : {1.0, 5.0})
    for (double b : {1.0, 5.0}) set.Add(ValueSurrogate::Zero({a, b}));
  return set;
}

// Value function of the decoupled game from state x at time t.
class LqValue : public ValueModel {
 public:
  explicit LqValue(const GameConfig& cfg) : cfg_(cfg) {}
  double LambdaV(const AgentState& a, double t) const {
    const double tau = cfg_.horizon - t;
    const double terminal =
        -(2.0 * (a.v - cfg_.reference_velocity) + 0.5 * cfg_.progress_weight * tau * tau) / (1.0 + tau);
    return terminal + cfg_.progress_weight * tau;
  }
  std::array<double, 2> Value(const JointState<2>&) const override { return {0.0, 0.0}; }
  std::array<std::array<double, kNetInputs>, 2> Gradient(const JointState<2>& x) const override {
    std::array<std::array<double, kNetInputs>, 2> g{};
    for (std::size_t i = 0; i < 2; ++i) {
      g[i][2 * i] = cfg_.progress_weight;
      g[i][2 * i + 1] = LambdaV(x.agents[i], x.t);
    }
    return g;
  }

 private:
  GameConfig cfg_;
};

TEST(ActionValue, ZeroSurrogateGivesInstantaneousReward) {
  GameConfig cfg;
  const auto set = ZeroSet();
  for (const auto& x : {State(15, 18, 16, 18, 0.0), State(35, 17, 36, 18, 1.0)}) {
    const Actions<2> u{2.5, -1.0};
    const Thetas<2> th{1.0, 5.0};
    const auto f = InstantaneousReward(x, u, th, cfg);
    for (std::size_t i = 0; i < 2; ++i)
      EXPECT_DOUBLE_EQ(ActionValue(x, u, th, i, set, cfg), f[i]);
  }
}

TEST(ActionValue, OutputBiasShiftLeavesQUnchanged) {
  GameConfig cfg;
  auto net = ValueSurrogate::Random({5.0, 5.0}, 3);
  net.zone_exit = cfg.ZoneExit();
  net.output_scale = 10.0;
  net.input_scale = {0.1, 0.5, 0.1, 0.5, 0.6};
  net.input_offset = {25, 18, 25, 18, 1.5};
  SurrogateSet a;
  a.Add(net);
  const auto x = State(20, 18, 22, 17, 0.5);
  const Actions<2> u{1.0, 0.5};
  const double qa = ActionValue(x, u, {5.0, 5.0}, 0, a, cfg);
  // A value model differing by a constant has the same gradient.
  struct Shifted : ValueModel {
    const ValueSurrogate& net;
    explicit Shifted(const ValueSurrogate& n) : net(n) {}
    std::array<double, 2> Value(const JointState<2>& s) const override {
      auto v = Forward(net, s);
      return {v[0] + 123.0, v[1] - 7.0};
    }
    std::array<std::array<double, kNetInputs>, 2> Gradient(const JointState<2>& s) const override {
      return InputGradient(net, s);
    }
  } model(net);
  const auto q = ActionValues(x, u, {5.0, 5.0}, 0, model, cfg, {u[0]});
  EXPECT_DOUBLE_EQ(q[0], qa);
}

TEST(ActionValue, AtHorizonReturnsTerminalReward) {
  GameConfig cfg;
  const auto set = ZeroSet();
  const auto x = State(50, 20, 45, 16, 3.0);
  const auto c = TerminalReward(x, cfg);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_EQ(ActionValue(x, {3.0, -2.0}, {1.0, 1.0}, i, set, cfg), c[i]);
}

TEST(ActionValue, MissingSurrogateThrows) {
  GameConfig cfg;
  SurrogateSet set;
  EXPECT_THROW(ActionValue(State(15, 18, 16, 18, 0), {0, 0}, {1, 1}, 0, set, cfg), MissingSurrogate);
}

TEST(SelectAction, ZeroSurrogateChoosesZeroEffort) {
  GameConfig cfg;
  const auto set = ZeroSet();
  EXPECT_EQ(SelectAction(State(15, 18, 16, 18, 0), {3.0, 4.0}, {5.0, 5.0}, 0, set, cfg), 0.0);
  EXPECT_EQ(SelectAction(State(15, 18, 16, 18, 0), {3.0, 4.0}, {5.0, 5.0}, 1, set, cfg), 0.0);
}

TEST(SelectAction, DecoupledGameMatchesAnalyticControl) {
  GameConfig cfg;
  cfg.collision_penalty = 0.0;
  for (double alpha : {1e-6, 1.0}) {
    cfg.progress_weight = alpha;
    const LqValue model(cfg);
    for (double v : {0.0, 10.0, 15.0, 18.0, 21.0, 30.0})
      for (double t : {0.0, 1.0, 2.5}) {
        const auto x = State(20, v, 22, 36.0 - v, t);
        for (std::size_t i = 0; i < 2; ++i) {
          const double want =
              std::clamp(0.5 * model.LambdaV(x.agents[i], t), cfg.action_min, cfg.action_max);
          const double got = SelectAction(x, {0.0, 0.0}, {1.0, 1.0}, i, model, cfg);
          EXPECT_LE(std::abs(got - want), cfg.action_step / 2 + 1e-12) << v << " " << t;
        }
      }
  }
}

TEST(ArgmaxLowest, TiesGoToLowerIndex) {
  EXPECT_EQ(ArgmaxLowest({1.0, 3.0, 3.0, 2.0}), 1u);
  EXPECT_EQ(ArgmaxLowest({5.0, 5.0}), 0u);
  EXPECT_EQ(ArgmaxLowest({-1.0}), 0u);
}

TEST(SelectAction, TieReturnsLowerAction) {
  GameConfig cfg;
  cfg.collision_penalty = 0.0;
  // Costate 0.5 on v: -u^2 + 0.5 u ties at u = 0 and u = 0.5.
  struct Flat : ValueModel {
    std::array<double, 2> Value(const JointState<2>&) const override { return {0, 0}; }
    std::array<std::array<double, kNetInputs>, 2> Gradient(const JointState<2>&) const override {
      std::array<std::array<double, kNetInputs>, 2> g{};
      g[0][1] = 0.5;
      return g;
    }
  } model;
  EXPECT_EQ(SelectAction(State(15, 18, 16, 18, 0), {0, 0}, {1, 1}, 0, model, cfg), 0.0);
}

TEST(ActionValues, RolloutModeUsesNextValue) {
  GameConfig cfg;
  const auto set = ZeroSet();
  const SurrogateModel model(set.Get({1.0, 1.0}));
  const auto x = State(15, 18, 16, 18, 0.0);
  const auto q = ActionValues(x, {0, 0}, {1, 1}, 0, model, cfg, {1.0}, QMode::kRollout);
  const double f = InstantaneousReward(x, {1.0, 0.0}, {1, 1}, cfg)[0];
  EXPECT_NEAR(q[0], f * cfg.dt, 1e-12);
}

}  // namespace
}  // namespace empathy
