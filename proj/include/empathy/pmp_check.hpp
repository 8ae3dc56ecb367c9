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

// Independent checker for equilibrium trajectories. Works only from the
// stored node values and the domain reward/Hamiltonian functions: actions at
// off-node points come from a golden-section maximization of H_i, derivatives
// from the Pontryagin conditions, and defects from the cubic interpolant of
// the nodes measured at three Lobatto points per interval.

#ifndef EMPATHY_PMP_CHECK_HPP_
#define EMPATHY_PMP_CHECK_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "empathy/bvp.hpp"
#include "empathy/domain.hpp"

namespace empathy {

struct PmpResiduals {
  double initial_state = 0.0;
  double terminal_costate = 0.0;
  double terminal_value = 0.0;
  double state_dynamics = 0.0;    // RMS relative defect, worst interval
  double costate_dynamics = 0.0;
  double value_dynamics = 0.0;
  double hamiltonian = 0.0;       // worst relative gain over the stored action
  double action_bounds = 0.0;     // worst excursion outside the action box

  double Max() const {
    return std::max({initial_state, terminal_costate, terminal_value, state_dynamics,
                     costate_dynamics, value_dynamics, hamiltonian, action_bounds});
  }
};

namespace check_detail {

// Maximizer of the concave function g on [lo, hi].
template <typename G>
double GoldenSectionMax(G&& g, double lo, double hi) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double gc = g(c), gd = g(d);
  while (b - a > 1e-11) {
    if (gc < gd) {
      a = c;
      c = d;
      gc = gd;
      d = a + ratio * (b - a);
      gd = g(d);
    } else {
      b = d;
      d = c;
      gd = gc;
      c = b - ratio * (b - a);
      gc = g(c);
    }
  }
  const double mid = 0.5 * (a + b);
  // The box edges are candidates too.
  double best = mid, best_val = g(mid);
  for (double e : {lo, hi})
    if (g(e) > best_val) {
      best = e;
      best_val = g(e);
    }
  return best;
}

template <std::size_t N>
struct Point {
  JointState<N> x;
  Costates<N> costate{};
  std::array<double, N> value{};
};

template <std::size_t N>
struct Derivative {
  StateVector<N> state{};
  Costates<N> costate{};
  std::array<double, N> value{};
};

template <std::size_t N>
Actions<N> MaximizeHamiltonians(const Point<N>& p, const Thetas<N>& theta,
                                const GameConfig& cfg) {
  Actions<N> u{};
  for (std::size_t i = 0; i < N; ++i) {
    u[i] = GoldenSectionMax(
        [&](double ui) {
          Actions<N> trial{};
          trial[i] = ui;
          return Hamiltonian(p.x, trial, p.costate[i], theta, i, cfg);
        },
        cfg.action_min, cfg.action_max);
  }
  return u;
}

template <std::size_t N>
Derivative<N> Pontryagin(const Point<N>& p, const Actions<N>& u, const Thetas<N>& theta,
                         const GameConfig& cfg) {
  Derivative<N> out;
  const auto rhs = DynamicsRhs(p.x, u);
  for (std::size_t j = 0; j < N; ++j) {
    out.state[2 * j] = rhs[j].d;
    out.state[2 * j + 1] = rhs[j].v;
  }
  const auto reward = InstantaneousReward(p.x, u, theta, cfg);
  for (std::size_t i = 0; i < N; ++i) {
    // grad_x (lambda . h) only has d/dv_j = lambda_{d_j}.
    const auto grad_f = InstantaneousRewardGradient(p.x, theta[i], cfg);
    for (std::size_t j = 0; j < N; ++j) {
      out.costate[i][2 * j] = -grad_f[2 * j];
      out.costate[i][2 * j + 1] = -(p.costate[i][2 * j] + grad_f[2 * j + 1]);
    }
    out.value[i] = -reward[i];
  }
  return out;
}

template <std::size_t N>
Point<N> Interpolate(const Point<N>& a, const Derivative<N>& da, const Point<N>& b,
                     const Derivative<N>& db, double h, double s, Derivative<N>* slope) {
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  const double g00 = (6 * s2 - 6 * s) / h, g10 = 3 * s2 - 4 * s + 1;
  const double g01 = (-6 * s2 + 6 * s) / h, g11 = 3 * s2 - 2 * s;
  auto mix = [&](double ya, double fa, double yb, double fb, double* dy) {
    *dy = g00 * ya + g10 * fa + g01 * yb + g11 * fb;
    return h00 * ya + h10 * h * fa + h01 * yb + h11 * h * fb;
  };
  Point<N> p;
  const auto sa = ToVector(a.x), sb = ToVector(b.x);
  StateVector<N> sv{};
  for (std::size_t c = 0; c < 2 * N; ++c)
    sv[c] = mix(sa[c], da.state[c], sb[c], db.state[c], &slope->state[c]);
  p.x = FromVector<N>(sv, a.x.t + s * h);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t c = 0; c < 2 * N; ++c)
      p.costate[i][c] = mix(a.costate[i][c], da.costate[i][c], b.costate[i][c],
                            db.costate[i][c], &slope->costate[i][c]);
    p.value[i] = mix(a.value[i], da.value[i], b.value[i], db.value[i], &slope->value[i]);
  }
  return p;
}

}  // namespace check_detail

template <std::size_t N>
PmpResiduals VerifyPmpResiduals(const EquilibriumTrajectory<N>& traj,
                                const BvpProblem<N>& prob) {
  using namespace check_detail;
  const auto& cfg = prob.cfg;
  const auto& theta = prob.theta;
  const std::size_t m = traj.size();
  if (m == 0 || traj.states.size() != m || traj.actions.size() != m ||
      traj.costates.size() != m || traj.values.size() != m)
    throw Error("trajectory arrays are inconsistent");

  PmpResiduals res;
  for (std::size_t j = 0; j < N; ++j) {
    res.initial_state = std::max({res.initial_state,
                                  std::abs(traj.states[0].agents[j].d - prob.x0.agents[j].d),
                                  std::abs(traj.states[0].agents[j].v - prob.x0.agents[j].v)});
  }
  const auto& final_state = traj.states.back();
  const auto terminal = TerminalReward(final_state, cfg);
  for (std::size_t i = 0; i < N; ++i) {
    const auto grad = TerminalRewardGradient(final_state, i, cfg);
    for (std::size_t c = 0; c < 2 * N; ++c)
      res.terminal_costate =
          std::max(res.terminal_costate, std::abs(traj.costates.back()[i][c] - grad[c]));
    res.terminal_value = std::max(res.terminal_value, std::abs(traj.values.back()[i] - terminal[i]));
  }

  // Maximum principle at the nodes: no action on a fine grid of the box (or
  // the box edges) does better than the stored one.
  constexpr int kProbe = 300;
  std::vector<Point<N>> points(m);
  std::vector<Derivative<N>> derivs(m);
  for (std::size_t k = 0; k < m; ++k) {
    points[k] = {traj.states[k], traj.costates[k], traj.values[k]};
    points[k].x.t = traj.times[k];
    const auto& u = traj.actions[k];
    for (std::size_t i = 0; i < N; ++i) {
      res.action_bounds = std::max({res.action_bounds, cfg.action_min - u[i], u[i] - cfg.action_max});
      const double h_stored = Hamiltonian(points[k].x, u, traj.costates[k][i], theta, i, cfg);
      double best = h_stored;
      for (int q = 0; q <= kProbe; ++q) {
        auto trial = u;
        trial[i] = cfg.action_min + (cfg.action_max - cfg.action_min) * q / kProbe;
        best = std::max(best, Hamiltonian(points[k].x, trial, traj.costates[k][i], theta, i, cfg));
      }
      res.hamiltonian = std::max(res.hamiltonian, (best - h_stored) / (1.0 + std::abs(h_stored)));
    }
    derivs[k] = Pontryagin(points[k], MaximizeHamiltonians(points[k], theta, cfg), theta, cfg);
  }

  const double offset = 0.5 * std::sqrt(3.0 / 7.0);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double h = traj.times[k + 1] - traj.times[k];
    if (!(h > 0.0)) throw Error("trajectory mesh is not increasing");
    std::array<double, 3> sums{};  // state, costate, value; mid and sides weighted
    for (int p = 0; p < 3; ++p) {
      const double s = p == 0 ? 0.5 : (p == 1 ? 0.5 - offset : 0.5 + offset);
      const double weight = p == 0 ? 32.0 / 45.0 : 49.0 / 90.0;
      Derivative<N> slope;
      const auto pt = Interpolate(points[k], derivs[k], points[k + 1], derivs[k + 1], h, s, &slope);
      const auto d = Pontryagin(pt, MaximizeHamiltonians(pt, theta, cfg), theta, cfg);
      auto rel = [](double a, double b) {
        const double e = (a - b) / (1.0 + std::abs(b));
        return e * e;
      };
      for (std::size_t c = 0; c < 2 * N; ++c) sums[0] += weight * rel(slope.state[c], d.state[c]);
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t c = 0; c < 2 * N; ++c)
          sums[1] += weight * rel(slope.costate[i][c], d.costate[i][c]);
        sums[2] += weight * rel(slope.value[i], d.value[i]);
      }
    }
    res.state_dynamics = std::max(res.state_dynamics, std::sqrt(0.5 * sums[0]));
    res.costate_dynamics = std::max(res.costate_dynamics, std::sqrt(0.5 * sums[1]));
    res.value_dynamics = std::max(res.value_dynamics, std::sqrt(0.5 * sums[2]));
  }
  return res;
}

// Trapezoidal recomputation of V_i(0) = c_i(x(T)) + integral of f_i.
template <std::size_t N>
std::array<double, N> TrapezoidInitialValue(const EquilibriumTrajectory<N>& traj,
                                            const GameConfig& cfg) {
  auto total = TerminalReward(traj.states.back(), cfg);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double h = traj.times[k + 1] - traj.times[k];
    const auto fa = InstantaneousReward(traj.states[k], traj.actions[k], traj.theta, cfg);
    const auto fb = InstantaneousReward(traj.states[k + 1], traj.actions[k + 1], traj.theta, cfg);
    for (std::size_t i = 0; i < N; ++i) total[i] += 0.5 * h * (fa[i] + fb[i]);
  }
  return total;
}

// Samples a trajectory at arbitrary times inside its mesh using the cubic
// interpolant with Pontryagin slopes. Actions are re-maximized at each sample.
template <std::size_t N>
EquilibriumTrajectory<N> ResampleTrajectory(const EquilibriumTrajectory<N>& traj,
                                            const GameConfig& cfg,
                                            const std::vector<double>& times) {
  using namespace check_detail;
  const std::size_t m = traj.size();
  if (m == 0) throw Error("cannot resample an empty trajectory");
  EquilibriumTrajectory<N> out = traj;
  out.times.clear();
  out.states.clear();
  out.actions.clear();
  out.costates.clear();
  out.values.clear();
  auto point = [&](std::size_t k) {
    Point<N> p{traj.states[k], traj.costates[k], traj.values[k]};
    p.x.t = traj.times[k];
    return p;
  };
  std::size_t k = 0;
  for (double t : times) {
    if (t < traj.times.front() - 1e-12 || t > traj.times.back() + 1e-12)
      throw Error("resample time outside the trajectory");
    while (k + 2 < m && traj.times[k + 1] < t) ++k;
    Point<N> p;
    Actions<N> u{};
    if (m == 1 || t == traj.times[k]) {
      p = point(k);
      u = traj.actions[k];
    } else if (t == traj.times[k + 1]) {
      p = point(k + 1);
      u = traj.actions[k + 1];
    } else {
      const auto a = point(k), b = point(k + 1);
      const auto da = Pontryagin(a, traj.actions[k], traj.theta, cfg);
      const auto db = Pontryagin(b, traj.actions[k + 1], traj.theta, cfg);
      const double h = traj.times[k + 1] - traj.times[k];
      Derivative<N> slope;
      p = Interpolate(a, da, b, db, h, (t - traj.times[k]) / h, &slope);
      for (std::size_t i = 0; i < N; ++i)
        u[i] = MaximizingAction(p.costate[i][2 * i + 1], cfg.action_min, cfg.action_max);
    }
    p.x.t = t;
    out.times.push_back(t);
    out.states.push_back(p.x);
    out.actions.push_back(u);
    out.costates.push_back(p.costate);
    out.values.push_back(p.value);
  }
  return out;
}

}  // namespace empathy

#endif  // EMPATHY_PMP_CHECK_HPP_
