#include <gtest/gtest.h>

#include <cmath>

#include "empathy/domain.hpp"

namespace empathy {
namespace {

JointState<2> Both(double d1, double v1, double d2, double v2, double t = 0.0) {
  JointState<2> x;
  x.agents[0] = {d1, v1};
  x.agents[1] = {d2, v2};
  x.t = t;
  return x;
}

TEST(DynamicsRhs, ReadsVelocityAndAction) {
  auto r = DynamicsRhs(Both(15, 18, 20, 18), Actions<2>{0.0, 10.0});
  EXPECT_EQ(r[0].d, 18.0);
  EXPECT_EQ(r[0].v, 0.0);
  EXPECT_EQ(r[1].d, 18.0);
  EXPECT_EQ(r[1].v, 10.0);
  r = DynamicsRhs(Both(17, 0, 17, 0), Actions<2>{-5.0, -5.0});
  EXPECT_EQ(r[0].d, 0.0);
  EXPECT_EQ(r[0].v, -5.0);
}

TEST(DynamicsStep, ClosedFormKinematics) {
  auto x = DynamicsStep(Both(15, 18, 0, 10), Actions<2>{2.0, -5.0}, 0.05);
  EXPECT_NEAR(x.agents[0].d, 15.9025, 1e-12);
  EXPECT_NEAR(x.agents[0].v, 18.1, 1e-12);
  EXPECT_NEAR(x.t, 0.05, 1e-15);
  x = DynamicsStep(Both(0, 10, 0, 10), Actions<2>{-5.0, -5.0}, 2.0);
  EXPECT_NEAR(x.agents[0].d, 10.0, 1e-12);
  EXPECT_NEAR(x.agents[0].v, 0.0, 1e-12);
}

TEST(DynamicsStep, ZeroStepIsIdentity) {
  const auto x0 = Both(15.3, 17.1, 19.2, 18.4, 0.7);
  EXPECT_EQ(DynamicsStep(x0, Actions<2>{0.0, 0.0}, 0.0), x0);
}

TEST(DynamicsStep, TwoHalfStepsEqualOneFullStepUnderConstantAction) {
  const auto x0 = Both(15.0, 18.0, 17.5, 16.0);
  const Actions<2> u{3.0, -4.5};
  const auto twice = DynamicsStep(DynamicsStep(x0, u, 0.05), u, 0.05);
  const auto once = DynamicsStep(x0, u, 0.1);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(twice.agents[j].d, once.agents[j].d, 1e-12);
    EXPECT_NEAR(twice.agents[j].v, once.agents[j].v, 1e-12);
  }
  // A change of action between the half steps breaks the equivalence.
  const auto mixed = DynamicsStep(DynamicsStep(x0, u, 0.05), Actions<2>{-3.0, 4.5}, 0.05);
  EXPECT_GT(std::abs(mixed.agents[0].v - once.agents[0].v), 0.1);
}

TEST(EffortReward, NegativeSquare) {
  EXPECT_EQ(EffortReward(0.0), 0.0);
  EXPECT_EQ(EffortReward(2.0), -4.0);
  EXPECT_EQ(EffortReward(-5.0), -25.0);
}

TEST(Sigmoids, MidpointsAtZoneBoundaries) {
  GameConfig cfg;
  EXPECT_DOUBLE_EQ(EntrySigmoid(cfg.road_length / 2 - 1.0 * cfg.car_width / 2, 1.0, cfg), 0.5);
  EXPECT_DOUBLE_EQ(EntrySigmoid(cfg.road_length / 2 - 5.0 * cfg.car_width / 2, 5.0, cfg), 0.5);
  EXPECT_DOUBLE_EQ(ExitSigmoid(cfg.road_length / 2 + cfg.car_width / 2 + cfg.car_length, cfg), 0.5);
  EXPECT_DOUBLE_EQ(cfg.ZoneEntry(1.0), 34.25);
  EXPECT_DOUBLE_EQ(cfg.ZoneExit(), 38.75);
}

TEST(Sigmoids, StableForLargeArguments) {
  for (double z : {-1000.0, -700.0, 0.0, 700.0, 1000.0}) {
    const double s = Sigmoid(z);
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_EQ(Sigmoid(1000.0), 1.0);
  EXPECT_EQ(Sigmoid(-1000.0), 0.0);
}

TEST(Sigmoids, MonotoneOnGrid) {
  GameConfig cfg;
  double prev_entry = -1.0, prev_exit = 2.0;
  for (double d = 0.0; d <= 90.0; d += 0.01) {
    const double e = EntrySigmoid(d, 1.0, cfg);
    const double x = ExitSigmoid(d, cfg);
    EXPECT_GE(e, prev_entry);
    EXPECT_LE(x, prev_exit);
    EXPECT_GE(EntrySigmoid(d, 5.0, cfg), e);
    prev_entry = e;
    prev_exit = x;
  }
}

TEST(CollisionLoss, InsideZoneNearFullPenalty) {
  GameConfig cfg;
  const double d = cfg.road_length / 2 + 1.0;
  const double loss = CollisionLoss(Both(d, 18, d, 18), 1.0, cfg);
  EXPECT_NEAR(loss, -1e4, 1e2);
}

TEST(CollisionLoss, FarFromZoneVanishes) {
  GameConfig cfg;
  EXPECT_NEAR(CollisionLoss(Both(15, 18, 15, 18), 1.0, cfg), 0.0, 1e-6 * cfg.collision_penalty);
  EXPECT_NEAR(CollisionLoss(Both(15, 18, 15, 18), 5.0, cfg), 0.0, 1e-6 * cfg.collision_penalty);
}

TEST(CollisionLoss, SymmetricUnderSwapAndBounded) {
  GameConfig cfg;
  for (double d1 = 10.0; d1 <= 60.0; d1 += 0.7)
    for (double d2 = 10.0; d2 <= 60.0; d2 += 1.3)
      for (double theta : {1.0, 5.0}) {
        const auto x = Both(d1, 18, d2, 17);
        const double a = CollisionLoss(x, theta, cfg);
        EXPECT_DOUBLE_EQ(a, CollisionLoss(SwapAgents(x), theta, cfg));
        EXPECT_LE(a, 0.0);
        EXPECT_GE(a, -cfg.collision_penalty * (1.0 + 1e-6));
      }
}

TEST(InstantaneousReward, SumsEffortAndCollision) {
  GameConfig cfg;
  const auto far = Both(15, 18, 15, 18);
  auto f = InstantaneousReward(far, Actions<2>{0.0, 0.0}, Thetas<2>{1.0, 1.0}, cfg);
  EXPECT_NEAR(f[0], 0.0, 1e-2);
  EXPECT_NEAR(f[1], 0.0, 1e-2);
  f = InstantaneousReward(far, Actions<2>{2.0, 0.0}, Thetas<2>{1.0, 1.0}, cfg);
  EXPECT_NEAR(f[0], -4.0, 1e-2);
  EXPECT_NEAR(f[1], 0.0, 1e-2);
  const double d = cfg.road_length / 2 + 1.0;
  f = InstantaneousReward(Both(d, 18, d, 18), Actions<2>{0.0, 0.0}, Thetas<2>{1.0, 1.0}, cfg);
  EXPECT_NEAR(f[0], -1e4, 1e2);
  EXPECT_NEAR(f[1], -1e4, 1e2);
}

TEST(TerminalReward, Formula) {
  GameConfig cfg;
  auto c = TerminalReward(Both(40, 18, 0, 18), cfg);
  EXPECT_NEAR(c[0], 4e-5, 1e-18);
  EXPECT_EQ(c[1], 0.0);
  c = TerminalReward(Both(50, 20, 0, 18), cfg);
  EXPECT_NEAR(c[0], 5e-5 - 4.0, 1e-15);
}

TEST(Hamiltonian, DecoupledGameReducesToProgressTerm) {
  GameConfig cfg;
  cfg.collision_penalty = 0.0;
  StateVector<2> lam{cfg.progress_weight, 0.0, 0.0, 0.0};
  const auto x = Both(17, 18, 16, 18);
  EXPECT_NEAR(Hamiltonian(x, Actions<2>{0.0, 0.0}, lam, Thetas<2>{1, 1}, 0, cfg),
              18.0 * cfg.progress_weight, 1e-18);
}

TEST(Hamiltonian, ZeroCostateGivesReward) {
  GameConfig cfg;
  const StateVector<2> zero{};
  const auto far = Both(15, 18, 15, 18);
  EXPECT_NEAR(Hamiltonian(far, Actions<2>{0.0, 0.0}, zero, Thetas<2>{5, 5}, 1, cfg), 0.0, 1e-2);
  for (double d : {30.0, 35.0, 37.0}) {
    const auto x = Both(d, 18, d + 0.5, 17);
    const Actions<2> u{1.5, -2.0};
    const Thetas<2> th{1.0, 5.0};
    for (std::size_t i = 0; i < 2; ++i)
      EXPECT_EQ(Hamiltonian(x, u, zero, th, i, cfg), InstantaneousReward(x, u, th, cfg)[i]);
  }
}

TEST(MaximizingAction, ClipsInteriorStationaryPoint) {
  EXPECT_EQ(MaximizingAction(4.0), 2.0);
  EXPECT_EQ(MaximizingAction(-30.0), -5.0);
  EXPECT_EQ(MaximizingAction(40.0), 10.0);
}

TEST(GameConfig, ValidatesInvariants) {
  GameConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  EXPECT_EQ(cfg.ActionGrid().size(), 31u);
  EXPECT_EQ(cfg.ActionGrid().front(), -5.0);
  EXPECT_EQ(cfg.ActionGrid().back(), 10.0);
  EXPECT_EQ(cfg.NumSteps(), 60u);
  auto bad = cfg;
  bad.road_length = 5.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = cfg;
  bad.epsilon = 1.5;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = cfg;
  bad.dt = 0.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = cfg;
  bad.action_max = 12.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = cfg;
  bad.sigmoid_shape = -1.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
}

TEST(AgentParams, IndexOrderAndNames) {
  const char* names[] = {"(a,n)", "(a,ln)", "(na,n)", "(na,ln)"};
  for (int k = 0; k < 4; ++k) {
    const auto p = AgentParams::FromIndex(k);
    EXPECT_EQ(p.index(), k);
    EXPECT_EQ(p.name(), names[k]);
  }
  EXPECT_EQ(AgentParams::FromIndex(0).theta(), 1.0);
  EXPECT_EQ(AgentParams::FromIndex(3).theta(), 5.0);
  EXPECT_EQ(AgentParams::FromIndex(0).lambda(), 0.1);
  EXPECT_EQ(AgentParams::FromIndex(1).lambda(), 0.5);
  EXPECT_THROW(AgentParams::FromIndex(4), Error);
}

}  // namespace
}  // namespace empathy
