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

// Common belief over the joint parameter grid and the two point estimators.
//
// Cell (r, c) of the 4x4 table is Pr(beta_1 = r, beta_2 = c), each axis in
// the order (a,n), (a,ln), (na,n), (na,ln); flat index 4 r + c.

#ifndef EMPATHY_ESTIMATION_HPP_
#define EMPATHY_ESTIMATION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "empathy/domain.hpp"
#include "empathy/planner.hpp"
#include "empathy/value_net.hpp"

namespace empathy {

inline constexpr std::size_t kBeliefCells = kParamsPerAgent * kParamsPerAgent;
inline constexpr double kLikelihoodFloor = 1e-300;

class DegenerateLikelihood : public Error {
 public:
  using Error::Error;
};

class ZeroConditional : public Error {
 public:
  using Error::Error;
};

using BeliefTable = std::array<double, kBeliefCells>;
using JointParams = std::array<AgentParams, 2>;

inline std::size_t CellIndex(const AgentParams& b1, const AgentParams& b2) {
  return static_cast<std::size_t>(kParamsPerAgent * b1.index() + b2.index());
}

inline JointParams CellParams(std::size_t cell) {
  return {AgentParams::FromIndex(static_cast<int>(cell) / kParamsPerAgent),
          AgentParams::FromIndex(static_cast<int>(cell) % kParamsPerAgent)};
}

struct JointBelief {
  BeliefTable probs{};
  BeliefTable prior{};

  static JointBelief FromPrior(const BeliefTable& prior) {
    JointBelief b{prior, prior};
    b.Validate();
    return b;
  }

  double Sum() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }

  void Validate() const {
    for (std::size_t k = 0; k < kBeliefCells; ++k) {
      if (!(probs[k] >= 0.0) || !std::isfinite(probs[k]))
        throw Error("belief entries must be finite and non-negative");
      if (!(prior[k] > 0.0)) throw Error("prior must be strictly positive on every cell");
    }
    if (std::abs(Sum() - 1.0) > 1e-12) throw Error("belief must sum to one");
  }

  friend bool operator==(const JointBelief&, const JointBelief&) = default;
};

// Independent per-agent marginals Pr(theta = a) and Pr(lambda = ln).
inline BeliefTable IndependentPrior(double p_aggressive, double p_less_noisy) {
  std::array<double, kParamsPerAgent> marginal{};
  for (int k = 0; k < kParamsPerAgent; ++k) {
    const auto p = AgentParams::FromIndex(k);
    marginal[static_cast<std::size_t>(k)] =
        (p.aggressiveness == Aggressiveness::kAggressive ? p_aggressive : 1.0 - p_aggressive) *
        (p.rationality == Rationality::kLessNoisy ? p_less_noisy : 1.0 - p_less_noisy);
  }
  BeliefTable t{};
  for (std::size_t r = 0; r < kParamsPerAgent; ++r)
    for (std::size_t c = 0; c < kParamsPerAgent; ++c)
      t[kParamsPerAgent * r + c] = marginal[r] * marginal[c];
  return t;
}

// Everyone most likely non-aggressive / most likely aggressive; agents mostly
// less noisy in both.
inline BeliefTable PriorNonAggressive() { return IndependentPrior(0.2, 0.8); }
inline BeliefTable PriorAggressive() { return IndependentPrior(0.8, 0.8); }

// --- Likelihood ----------------------------------------------------------------

inline std::size_t SnapToGrid(double u, const GameConfig& cfg) {
  const auto cells = cfg.ActionGrid().size();
  const double k = std::round((u - cfg.action_min) / cfg.action_step);
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(cells - 1)));
}

// Boltzmann distribution exp(lambda Q) / sum exp(lambda Q) over the grid.
inline std::vector<double> Softmax(const std::vector<double>& q, double lambda) {
  std::vector<double> p(q.size());
  if (q.empty()) return p;
  double top = -std::numeric_limits<double>::infinity();
  for (double v : q) top = std::max(top, lambda * v);
  double total = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    p[k] = std::exp(lambda * q[k] - top);
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

// Probability that agent i picks the grid cell of u_i, given that the others
// play u_prev and the agent's parameters are beta (joint).
inline double ActionLikelihood(const JointState<2>& x, double u_i, const Actions<2>& u_prev,
                               const JointParams& beta, std::size_t i,
                               const SurrogateSet& surrogates, const GameConfig& cfg) {
  const Thetas<2> theta{beta[0].theta(), beta[1].theta()};
  const SurrogateModel model(surrogates.Get(theta));
  const auto q = ActionValues(x, u_prev, theta, i, model, cfg, cfg.ActionGrid());
  return Softmax(q, beta[i].lambda())[SnapToGrid(u_i, cfg)];
}

// Joint likelihood prod_i p(u_i | x; beta) for all 16 cells. One action-value
// row per (aggressiveness pair, agent) is shared between rationality levels.
inline BeliefTable JointLikelihoods(const JointState<2>& x, const Actions<2>& u,
                                    const Actions<2>& u_prev, const SurrogateSet& surrogates,
                                    const GameConfig& cfg) {
  const auto grid = cfg.ActionGrid();
  // prob[theta1][theta2][agent][rationality]
  double prob[2][2][2][2];
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) {
      const Thetas<2> theta{ThetaValue(static_cast<Aggressiveness>(a1)),
                            ThetaValue(static_cast<Aggressiveness>(a2))};
      const SurrogateModel model(surrogates.Get(theta));
      for (std::size_t i = 0; i < 2; ++i) {
        const auto q = ActionValues(x, u_prev, theta, i, model, cfg, grid);
        const std::size_t cell = SnapToGrid(u[i], cfg);
        for (int r = 0; r < 2; ++r)
          prob[a1][a2][i][r] = Softmax(q, LambdaValue(static_cast<Rationality>(r)))[cell];
      }
    }
  BeliefTable out{};
  for (std::size_t cell = 0; cell < kBeliefCells; ++cell) {
    const auto beta = CellParams(cell);
    const int a1 = static_cast<int>(beta[0].aggressiveness);
    const int a2 = static_cast<int>(beta[1].aggressiveness);
    out[cell] = prob[a1][a2][0][static_cast<int>(beta[0].rationality)] *
                prob[a1][a2][1][static_cast<int>(beta[1].rationality)];
  }
  return out;
}

// --- Belief operations ---------------------------------------------------------

struct BeliefUpdate {
  JointBelief belief;
  bool degenerate = false;  // every likelihood below the floor; belief unchanged
};

inline BeliefUpdate UpdateBelief(const JointBelief& bel, const BeliefTable& likelihood) {
  BeliefUpdate out{bel, false};
  const bool all_tiny = std::all_of(likelihood.begin(), likelihood.end(),
                                    [](double l) { return !(l >= kLikelihoodFloor); });
  BeliefTable post{};
  double total = 0.0;
  for (std::size_t k = 0; k < kBeliefCells; ++k) {
    post[k] = likelihood[k] * bel.probs[k];
    total += post[k];
  }
  if (all_tiny || !(total >= kLikelihoodFloor) || !std::isfinite(total)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t k = 0; k < kBeliefCells; ++k) out.belief.probs[k] = post[k] / total;
  return out;
}

inline BeliefUpdate UpdateBelief(const JointBelief& bel, const JointState<2>& x,
                                 const Actions<2>& u, const Actions<2>& u_prev,
                                 const SurrogateSet& surrogates, const GameConfig& cfg) {
  return UpdateBelief(bel, JointLikelihoods(x, u, u_prev, surrogates, cfg));
}

inline JointBelief SmoothBelief(const JointBelief& bel, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
  JointBelief out = bel;
  for (std::size_t k = 0; k < kBeliefCells; ++k)
    out.probs[k] = (1.0 - epsilon) * bel.probs[k] + epsilon * bel.prior[k];
  return out;
}

// --- Point estimates -------------------------------------------------------------

// Joint argmax; the first cell in table order wins ties.
inline JointParams EmpatheticEstimate(const JointBelief& bel) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kBeliefCells; ++k)
    if (bel.probs[k] > bel.probs[best]) best = k;
  return CellParams(best);
}

// Argmax of the fellow's parameters conditioned on agent i's true parameters.
inline AgentParams NonEmpatheticEstimate(const JointBelief& bel, std::size_t i,
                                         const AgentParams& own_truth) {
  if (i > 1) throw Error("agent index out of range");
  double mass = 0.0;
  int best = 0;
  double best_p = -1.0;
  for (int k = 0; k < kParamsPerAgent; ++k) {
    const auto other = AgentParams::FromIndex(k);
    const double p = i == 0 ? bel.probs[CellIndex(own_truth, other)]
                            : bel.probs[CellIndex(other, own_truth)];
    mass += p;
    if (p > best_p) {
      best_p = p;
      best = k;
    }
  }
  if (!(mass >= kLikelihoodFloor))
    throw ZeroConditional("no belief mass on the agent's own parameters");
  return AgentParams::FromIndex(best);
}

// As above; a slice emptied by underflow in the last Bayes update is read
// from the smoothed table instead.
inline AgentParams NonEmpatheticEstimate(const JointBelief& bel, std::size_t i,
                                         const AgentParams& own_truth, double epsilon) {
  try {
    return NonEmpatheticEstimate(bel, i, own_truth);
  } catch (const ZeroConditional&) {
    return NonEmpatheticEstimate(SmoothBelief(bel, epsilon), i, own_truth);
  }
}

}  // namespace empathy

#endif  // EMPATHY_ESTIMATION_HPP_
