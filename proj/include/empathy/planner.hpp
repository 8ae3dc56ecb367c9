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

// Hamiltonian action-values from value surrogates and the deterministic
// greedy policy over the action grid.
//
//   Q_i(x, u; theta) = f_i(x, u; theta_i) + grad_x V_i(x, t; theta) . h(x, u)

#ifndef EMPATHY_PLANNER_HPP_
#define EMPATHY_PLANNER_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

#include "empathy/domain.hpp"
#include "empathy/value_net.hpp"

namespace empathy {

enum class QMode {
  kHamiltonian,  // f_i + grad V . h
  kRollout,      // f_i dt + V(x', t + dt); diagnostics only
};

// Anything with Value(x) and Gradient(x) in physical units; lets analytic
// value functions stand in for a trained surrogate.
struct ValueModel {
  virtual ~ValueModel() = default;
  virtual std::array<double, 2> Value(const JointState<2>& x) const = 0;
  virtual std::array<std::array<double, kNetInputs>, 2> Gradient(const JointState<2>& x) const = 0;
};

class SurrogateModel : public ValueModel {
 public:
  explicit SurrogateModel(const ValueSurrogate& net) : net_(net) {}
  std::array<double, 2> Value(const JointState<2>& x) const override { return Forward(net_, x); }
  std::array<std::array<double, kNetInputs>, 2> Gradient(const JointState<2>& x) const override {
    return InputGradient(net_, x);
  }

 private:
  const ValueSurrogate& net_;
};

inline bool AtHorizon(const JointState<2>& x, const GameConfig& cfg) {
  return x.t >= cfg.horizon - 1e-9 * std::max(1.0, cfg.horizon);
}

// Q for every candidate in `own_actions`, with the other agent's action fixed
// at fellow[j] for j != i.
inline std::vector<double> ActionValues(const JointState<2>& x, const Actions<2>& fellow,
                                        const Thetas<2>& theta_hat, std::size_t i,
                                        const ValueModel& model, const GameConfig& cfg,
                                        const std::vector<double>& own_actions,
                                        QMode mode = QMode::kHamiltonian) {
  std::vector<double> q(own_actions.size());
  if (AtHorizon(x, cfg)) {
    const double c = TerminalReward(x, cfg)[i];
    for (auto& v : q) v = c;
    return q;
  }
  const double collision = CollisionLoss(x, theta_hat[i], cfg);
  if (mode == QMode::kHamiltonian) {
    const auto g = model.Gradient(x)[i];
    double drift = 0.0;  // terms independent of u_i
    for (std::size_t j = 0; j < 2; ++j) {
      drift += g[2 * j] * x.agents[j].v;
      if (j != i) drift += g[2 * j + 1] * fellow[j];
    }
    for (std::size_t k = 0; k < own_actions.size(); ++k) {
      const double u = own_actions[k];
      q[k] = EffortReward(u) + collision + drift + g[2 * i + 1] * u;
    }
    return q;
  }
  for (std::size_t k = 0; k < own_actions.size(); ++k) {
    Actions<2> u = fellow;
    u[i] = own_actions[k];
    const auto next = DynamicsStep(x, u, cfg.dt);
    const double tail = AtHorizon(next, cfg) ? TerminalReward(next, cfg)[i] : model.Value(next)[i];
    q[k] = (EffortReward(u[i]) + collision) * cfg.dt + tail;
  }
  return q;
}

// Q_i for one joint action.
inline double ActionValue(const JointState<2>& x, const Actions<2>& u, const Thetas<2>& theta_hat,
                          std::size_t i, const SurrogateSet& surrogates, const GameConfig& cfg,
                          QMode mode = QMode::kHamiltonian) {
  const SurrogateModel model(surrogates.Get(theta_hat));
  return ActionValues(x, u, theta_hat, i, model, cfg, {u[i]}, mode)[0];
}

// Index of the largest entry; the lowest index wins ties.
inline std::size_t ArgmaxLowest(const std::vector<double>& q) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < q.size(); ++k)
    if (q[k] > q[best]) best = k;
  return best;
}

inline double SelectAction(const JointState<2>& x, const Actions<2>& u_prev,
                           const Thetas<2>& theta_hat, std::size_t i, const ValueModel& model,
                           const GameConfig& cfg, QMode mode = QMode::kHamiltonian) {
  const auto grid = cfg.ActionGrid();
  return grid[ArgmaxLowest(ActionValues(x, u_prev, theta_hat, i, model, cfg, grid, mode))];
}

inline double SelectAction(const JointState<2>& x, const Actions<2>& u_prev,
                           const Thetas<2>& theta_hat, std::size_t i,
                           const SurrogateSet& surrogates, const GameConfig& cfg,
                           QMode mode = QMode::kHamiltonian) {
  return SelectAction(x, u_prev, theta_hat, i, SurrogateModel(surrogates.Get(theta_hat)), cfg,
                      mode);
}

}  // namespace empathy

#endif  // EMPATHY_PLANNER_HPP_
