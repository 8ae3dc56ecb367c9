#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "empathy/planner.hpp"
#include "empathy/estimation.hpp"

namespace empathy {
namespace {

constexpr std::uint64_t kSeed = 20240611;

JointState<2> RandomState(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(15.0, 45.0), v(10.0, 25.0), t(0.0, 2.9);
  JointState<2> x;
  x.agents[0] = {d(rng), v(rng)};
  x.agents[1] = {d(rng), v(rng)};
  x.t = t(rng);
  return x;
}

BeliefTable RandomTable(std::mt19937_64& rng, bool strictly_positive) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BeliefTable t{};
  double s = 0.0;
  for (auto& p : t) {
    p = strictly_positive ? 0.01 + u(rng) : (u(rng) < 0.3 ? 0.0 : u(rng));
    s += p;
  }
  if (s == 0.0) {
    t[0] = 1.0;
    s = 1.0;
  }
  for (auto& p : t) p /= s;
  return t;
}

ValueSurrogate ScaledNet(const Thetas<2>& th, std::uint64_t seed) {
  auto net = ValueSurrogate::Random(th, seed);
  net.zone_exit = GameConfig{}.ZoneExit();
  net.input_offset = {30.0, 17.0, 30.0, 17.0, 1.5};
  net.input_scale = {1.0 / 15, 1.0 / 5, 1.0 / 15, 1.0 / 5, 1.0 / 1.5};
  net.output_scale = 60.0;
  net.gate_slope = 1.0;
  return net;
}

TEST(RewardProperty, AnalyticGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(kSeed);
  GameConfig cfg;
  std::uniform_int_distribution<int> pick(0, 1);
  for (int n = 0; n < 100; ++n) {
    const auto x = RandomState(rng);
    const double theta = pick(rng) ? 1.0 : 5.0;
    const auto g = InstantaneousRewardGradient(x, theta, cfg);
    const auto gc = TerminalRewardGradient(x, 0, cfg);
    for (std::size_t c = 0; c < 4; ++c) {
      const double h = 1e-6;
      auto y = ToVector(x);
      y[c] += h;
      const auto xp = FromVector<2>(y, x.t);
      y[c] -= 2 * h;
      const auto xm = FromVector<2>(y, x.t);
      const double fd = (CollisionLoss(xp, theta, cfg) - CollisionLoss(xm, theta, cfg)) / (2 * h);
      EXPECT_NEAR(g[c], fd, 1e-4 * std::max(1.0, std::abs(fd)));
      const double fdc = (TerminalReward(xp, cfg)[0] - TerminalReward(xm, cfg)[0]) / (2 * h);
      EXPECT_NEAR(gc[c], fdc, 1e-4 * std::max(1.0, std::abs(fdc)));
    }
  }
}

TEST(DynamicsProperty, TwoHalfStepsEqualOneStep) {
  std::mt19937_64 rng(kSeed + 1);
  std::uniform_real_distribution<double> u(kActionMin, kActionMax);
  for (int n = 0; n < 200; ++n) {
    const auto x = RandomState(rng);
    const Actions<2> a{u(rng), u(rng)};
    const auto once = DynamicsStep(x, a, 0.05);
    const auto twice = DynamicsStep(DynamicsStep(x, a, 0.025), a, 0.025);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(once.agents[i].d, twice.agents[i].d, 1e-12);
      EXPECT_NEAR(once.agents[i].v, twice.agents[i].v, 1e-12);
    }
  }
}

TEST(SoftmaxProperty, NormalizedAndInvariant) {
  std::mt19937_64 rng(kSeed + 2);
  std::uniform_real_distribution<double> q(-50.0, 50.0), shift(-1e3, 1e3), lam(0.05, 5.0);
  for (int n = 0; n < 1000; ++n) {
    std::vector<double> v(31);
    for (auto& e : v) e = q(rng);
    const double l = lam(rng), c = shift(rng);
    const auto p = Softmax(v, l);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    auto shifted = v;
    for (auto& e : shifted) e += c;
    const auto ps = Softmax(shifted, l);
    // lambda Q depends only on the product.
    auto scaled = v;
    for (auto& e : scaled) e *= 2.0;
    const auto pl = Softmax(scaled, l / 2.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
      EXPECT_NEAR(p[k], ps[k], 1e-12);
      EXPECT_NEAR(p[k], pl[k], 1e-12);
      EXPECT_GE(p[k], 0.0);
    }
  }
}

TEST(BeliefProperty, FuzzNormalizationAndPositivity) {
  std::mt19937_64 rng(kSeed + 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double eps = GameConfig{}.epsilon;
  for (int run = 0; run < 1000; ++run) {
    const auto prior = RandomTable(rng, true);
    auto bel = JointBelief::FromPrior(prior);
    const double floor = eps * *std::min_element(prior.begin(), prior.end());
    for (int step = 0; step < 20; ++step) {
      BeliefTable l{};
      for (auto& e : l) e = u(rng) < 0.2 ? 0.0 : std::pow(u(rng), 6.0);
      const auto smoothed = SmoothBelief(bel, eps);
      EXPECT_NEAR(smoothed.Sum(), 1.0, 1e-12);
      for (double p : smoothed.probs) ASSERT_GE(p, floor);
      const auto out = UpdateBelief(smoothed, l);
      EXPECT_NEAR(out.belief.Sum(), 1.0, 1e-12);
      for (double p : out.belief.probs) ASSERT_GE(p, 0.0);
      bel = out.belief;
    }
  }
}

TEST(EstimateProperty, EmpatheticMatchesBruteForce) {
  std::mt19937_64 rng(kSeed + 4);
  for (int n = 0; n < 1000; ++n) {
    auto bel = JointBelief::FromPrior(RandomTable(rng, true));
    bel.probs = RandomTable(rng, n % 2 == 0);
    if (n % 5 == 0) bel.probs[(n / 5) % 16] = bel.probs[(n / 5 + 3) % 16];  // ties
    std::size_t best = 0;
    for (std::size_t k = 0; k < kBeliefCells; ++k)
      if (bel.probs[k] > bel.probs[best]) best = k;
    const auto est = EmpatheticEstimate(bel);
    EXPECT_EQ(CellIndex(est[0], est[1]), best);
    for (std::size_t k = 0; k < kBeliefCells; ++k) EXPECT_GE(bel.probs[best], bel.probs[k]);
  }
}

TEST(EstimateProperty, NonEmpatheticMatchesConditionalBruteForce) {
  std::mt19937_64 rng(kSeed + 5);
  for (int n = 0; n < 1000; ++n) {
    auto bel = JointBelief::FromPrior(RandomTable(rng, true));
    bel.probs = RandomTable(rng, n % 2 == 0);
    for (std::size_t i = 0; i < 2; ++i)
      for (int own = 0; own < kParamsPerAgent; ++own) {
        const auto truth = AgentParams::FromIndex(own);
        std::array<double, kParamsPerAgent> cond{};
        for (int k = 0; k < kParamsPerAgent; ++k) {
          const auto o = AgentParams::FromIndex(k);
          cond[k] = i == 0 ? bel.probs[CellIndex(truth, o)] : bel.probs[CellIndex(o, truth)];
        }
        const double mass = std::accumulate(cond.begin(), cond.end(), 0.0);
        if (mass == 0.0) {
          EXPECT_THROW(NonEmpatheticEstimate(bel, i, truth), ZeroConditional);
          continue;
        }
        const auto best = std::max_element(cond.begin(), cond.end()) - cond.begin();
        EXPECT_EQ(NonEmpatheticEstimate(bel, i, truth).index(), best);
        // The normalized conditional has the same argmax.
        for (auto& c : cond) c /= mass;
        EXPECT_EQ(std::max_element(cond.begin(), cond.end()) - cond.begin(), best);
      }
  }
}

TEST(ValueNetProperty, ForwardAndGradientConsistent) {
  std::mt19937_64 rng(kSeed + 6);
  const auto net = ScaledNet({1.0, 5.0}, 99);
  for (int n = 0; n < 1000; ++n) {
    const auto x = RandomState(rng);
    const auto a = Forward(net, x);
    const auto e = EvaluateWithGradient(net, x);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(a[i], e.value[i], 1e-12 * (1 + std::abs(a[i])));
      EXPECT_TRUE(std::isfinite(a[i]));
      EXPECT_LE(std::abs(a[i]), net.output_scale * 3.0);
    }
  }
}

TEST(ValueNetProperty, InputGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(kSeed + 7);
  const auto net = ScaledNet({5.0, 1.0}, 5);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const auto x = RandomState(rng);
    const auto g = InputGradient(net, x);
    for (std::size_t c = 0; c < kNetInputs; ++c) {
      const double h = 1e-5;
      auto bump = [&](double delta) {
        auto s = x;
        if (c == 4) s.t += delta;
        else if (c % 2 == 0) s.agents[c / 2].d += delta;
        else s.agents[c / 2].v += delta;
        return Forward(net, s);
      };
      const auto fp = bump(h), fm = bump(-h);
      for (std::size_t i = 0; i < 2; ++i) {
        const double fd = (fp[i] - fm[i]) / (2 * h);
        worst = std::max(worst, std::abs(g[i][c] - fd) / std::max(1.0, std::abs(fd)));
      }
    }
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(PlannerProperty, SelectActionMatchesBruteForce) {
  std::mt19937_64 rng(kSeed + 8);
  GameConfig cfg;
  SurrogateSet set;
  std::uint64_t seed = 1;
  for (double a : {1.0, 5.0})
    for (double b : {1.0, 5.0}) set.Add(ScaledNet({a, b}, seed++));
  std::uniform_int_distribution<int> cell(0, 30), pick(0, 1);
  const auto grid = cfg.ActionGrid();
  for (int n = 0; n < 100; ++n) {
    const auto x = RandomState(rng);
    const Actions<2> prev{grid[cell(rng)], grid[cell(rng)]};
    const Thetas<2> th{pick(rng) ? 1.0 : 5.0, pick(rng) ? 1.0 : 5.0};
    for (std::size_t i = 0; i < 2; ++i) {
      double best_u = grid[0];
      double best_q = -std::numeric_limits<double>::infinity();
      for (double u : grid) {
        Actions<2> joint = prev;
        joint[i] = u;
        const double q = ActionValue(x, joint, th, i, set, cfg);
        if (q > best_q) {
          best_q = q;
          best_u = u;
        }
      }
      EXPECT_EQ(SelectAction(x, prev, th, i, set, cfg), best_u);
    }
  }
}

TEST(LikelihoodProperty, JointTableIsProductOfMarginals) {
  std::mt19937_64 rng(kSeed + 9);
  GameConfig cfg;
  SurrogateSet set;
  std::uint64_t seed = 40;
  for (double a : {1.0, 5.0})
    for (double b : {1.0, 5.0}) set.Add(ScaledNet({a, b}, seed++));
  std::uniform_int_distribution<int> cell(0, 30);
  const auto grid = cfg.ActionGrid();
  for (int n = 0; n < 20; ++n) {
    const auto x = RandomState(rng);
    const Actions<2> u{grid[cell(rng)], grid[cell(rng)]};
    const Actions<2> prev{grid[cell(rng)], grid[cell(rng)]};
    const auto table = JointLikelihoods(x, u, prev, set, cfg);
    for (std::size_t k = 0; k < kBeliefCells; ++k) {
      const auto beta = CellParams(k);
      const double want = ActionLikelihood(x, u[0], prev, beta, 0, set, cfg) *
                          ActionLikelihood(x, u[1], prev, beta, 1, set, cfg);
      EXPECT_NEAR(table[k], want, 1e-14);
    }
  }
}

}  // namespace
}  // namespace empathy
