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

// Open-loop Nash equilibria of the complete-information game from Pontryagin's
// conditions. For every agent i the co-state lambda_i is the gradient of its
// value with respect to the joint state, and
//
//   x'        = h(x, u)                      x(0) = x0
//   lambda_i' = -grad_x H_i                  lambda_i(T) = grad_x c_i(x(T))
//   u_i       = argmax_{u in U} H_i          = clip(lambda_i[v_i] / 2)
//   V_i'      = -f_i                         V_i(T) = c_i(x(T))
//
// with H_i = lambda_i . h + f_i. The coupled state/co-state system is solved
// by fourth-order Lobatto (Hermite-Simpson) collocation with a damped Newton
// method and residual-driven mesh refinement. The value is integrated backward
// afterwards with the same quadrature.

#ifndef EMPATHY_BVP_HPP_
#define EMPATHY_BVP_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "empathy/domain.hpp"

namespace empathy {

class InvalidGuess : public Error {
 public:
  using Error::Error;
};

template <std::size_t N = kNumAgents>
using Costates = std::array<StateVector<N>, N>;

template <std::size_t N = kNumAgents>
struct BvpProblem {
  JointState<N> x0{};
  Thetas<N> theta{};
  GameConfig cfg{};
  std::vector<double> time_grid;

  void Validate() const {
    cfg.Validate();
    if (time_grid.empty()) throw Error("time grid is empty");
    if (time_grid.front() != 0.0)
      throw Error("time grid must start at 0");
    if (std::abs(time_grid.back() - cfg.horizon) > 1e-12)
      throw Error("time grid must end at the horizon");
    for (std::size_t k = 1; k < time_grid.size(); ++k)
      if (!(time_grid[k] > time_grid[k - 1]))
        throw Error("time grid must be strictly increasing");
    for (const auto& a : x0.agents)
      if (!std::isfinite(a.d) || !std::isfinite(a.v))
        throw Error("initial state must be finite");
  }
};

template <std::size_t N = kNumAgents>
struct EquilibriumTrajectory {
  Thetas<N> theta{};
  std::vector<double> times;
  std::vector<JointState<N>> states;
  std::vector<Actions<N>> actions;
  std::vector<Costates<N>> costates;
  std::vector<std::array<double, N>> values;
  bool converged = false;
  double residual_norm = std::numeric_limits<double>::infinity();
  int newton_iterations = 0;
  // Set for a symmetric start with equal aggressiveness: the agent-swapped
  // trajectory is an equilibrium as well and was not returned.
  bool symmetric_start = false;
  std::string diagnostics;

  std::size_t size() const { return times.size(); }
};

// Mirrors a two-agent trajectory across the d1 = d2 diagonal.
inline EquilibriumTrajectory<2> SwapAgents(const EquilibriumTrajectory<2>& in) {
  EquilibriumTrajectory<2> out = in;
  out.theta = {in.theta[1], in.theta[0]};
  for (std::size_t k = 0; k < in.size(); ++k) {
    out.states[k] = SwapAgents(in.states[k]);
    out.actions[k] = {in.actions[k][1], in.actions[k][0]};
    out.values[k] = {in.values[k][1], in.values[k][0]};
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& c = in.costates[k][1 - i];
      out.costates[k][i] = {c[2], c[3], c[0], c[1]};
    }
  }
  return out;
}

// --- Conflict-time heuristic -------------------------------------------------

struct ConflictTimes {
  double entry = 0.0;  // t1: trailing car enters the zone at full braking
  double exit = 0.0;   // t2: leading car leaves the zone at constant speed
  std::size_t leader = 0;
};

namespace detail {

// Position of a car braking at `decel` (< 0) that stops once v reaches zero.
inline double BrakingPosition(double d0, double v0, double decel, double t) {
  const double t_stop = v0 / -decel;
  const double s = std::min(t, t_stop);
  return d0 + v0 * s + 0.5 * decel * s * s;
}
inline double BrakingVelocity(double v0, double decel, double t) {
  return std::max(0.0, v0 + decel * t);
}

}  // namespace detail

template <std::size_t N>
std::size_t LeadingAgent(const JointState<N>& x0) {
  std::size_t lead = 0;
  for (std::size_t j = 1; j < N; ++j)
    if (x0.agents[j].d > x0.agents[lead].d) lead = j;
  return lead;
}

template <std::size_t N>
ConflictTimes PredictConflictTimes(const JointState<N>& x0, const Thetas<N>& theta,
                                   const GameConfig& cfg) {
  ConflictTimes out;
  out.leader = LeadingAgent(x0);
  const double horizon = cfg.horizon;
  const auto& lead = x0.agents[out.leader];
  const double to_exit = cfg.ZoneExit() - lead.d;
  if (to_exit <= 0.0) {
    out.exit = 0.0;
  } else if (lead.v <= 0.0) {
    out.exit = horizon;
  } else {
    out.exit = std::min(horizon, to_exit / lead.v);
  }

  const double decel = cfg.action_min;
  out.entry = horizon;
  for (std::size_t j = 0; j < N; ++j) {
    if (j == out.leader) continue;
    const auto& car = x0.agents[j];
    const double gap = cfg.ZoneEntry(theta[j]) - car.d;
    double t_entry = horizon;
    if (gap <= 0.0) {
      t_entry = 0.0;
    } else {
      // d0 + v t + a t^2 / 2 = entry, first root before the car stops.
      const double disc = car.v * car.v + 2.0 * decel * gap;
      if (disc >= 0.0 && car.v > 0.0) {
        t_entry = (car.v - std::sqrt(disc)) / -decel;
        if (decel == 0.0) t_entry = gap / car.v;
      }
    }
    out.entry = std::min(out.entry, std::clamp(t_entry, 0.0, horizon));
  }
  return out;
}

// --- Mesh and initial guess --------------------------------------------------

struct MeshOptions {
  double base_step = 0.01;
  // Dense stamps t1 +- dense_step * k, k = 0..dense_count.
  double dense_step = 1.25e-6;
  int dense_count = 800;
  // Wider cluster t1 +- wide_step * k up to wide_half_width. Zero disables it.
  double wide_step = 0.005;
  double wide_half_width = 0.25;
};

inline std::vector<double> BuildMesh(double t1, double horizon,
                                     const MeshOptions& opts = {}) {
  std::vector<double> t;
  if (horizon <= 0.0) return {0.0};
  const auto base = static_cast<std::size_t>(std::ceil(horizon / opts.base_step - 1e-9));
  for (std::size_t k = 0; k <= base; ++k)
    t.push_back(std::min(horizon, static_cast<double>(k) * horizon / static_cast<double>(base)));
  for (int k = 0; k <= opts.dense_count; ++k) {
    t.push_back(t1 + opts.dense_step * k);
    t.push_back(t1 - opts.dense_step * k);
  }
  if (opts.wide_step > 0.0) {
    const int wide = static_cast<int>(std::floor(opts.wide_half_width / opts.wide_step + 1e-9));
    for (int k = 0; k <= wide; ++k) {
      t.push_back(t1 + opts.wide_step * k);
      t.push_back(t1 - opts.wide_step * k);
    }
  }
  std::vector<double> kept;
  for (double s : t)
    if (s >= 0.0 && s <= horizon) kept.push_back(s);
  std::sort(kept.begin(), kept.end());
  std::vector<double> mesh;
  const double merge = 1e-9 * std::max(1.0, horizon);
  for (double s : kept)
    if (mesh.empty() || s - mesh.back() > merge) mesh.push_back(s);
  // Land exactly on the end points.
  mesh.front() = 0.0;
  if (horizon - mesh.back() <= merge) mesh.back() = horizon; else mesh.push_back(horizon);
  return mesh;
}

template <std::size_t N>
BvpProblem<N> MakeProblem(const JointState<N>& x0, const Thetas<N>& theta,
                          const GameConfig& cfg, const MeshOptions& mesh = {}) {
  BvpProblem<N> prob{x0, theta, cfg, {}};
  const auto times = PredictConflictTimes(x0, theta, cfg);
  prob.time_grid = BuildMesh(times.entry, cfg.horizon, mesh);
  return prob;
}

template <std::size_t N = kNumAgents>
struct BvpGuess {
  std::vector<double> times;
  std::vector<JointState<N>> states;
  std::vector<Costates<N>> costates;
};

// Leading car at constant speed, every other car braking at the minimum
// action; co-states from the terminal condition propagated backward with the
// collision gradient ignored.
template <std::size_t N>
BvpGuess<N> BuildInitialGuess(const BvpProblem<N>& prob) {
  prob.Validate();
  const auto& cfg = prob.cfg;
  const std::size_t lead = LeadingAgent(prob.x0);
  BvpGuess<N> guess;
  guess.times = prob.time_grid;
  for (double t : prob.time_grid) {
    JointState<N> x;
    x.t = t;
    for (std::size_t j = 0; j < N; ++j) {
      const auto& a = prob.x0.agents[j];
      if (j == lead) {
        x.agents[j] = {a.d + a.v * t, a.v};
      } else {
        x.agents[j] = {detail::BrakingPosition(a.d, a.v, cfg.action_min, t),
                       detail::BrakingVelocity(a.v, cfg.action_min, t)};
      }
    }
    guess.states.push_back(x);
  }
  const auto& final_state = guess.states.back();
  for (double t : prob.time_grid) {
    Costates<N> c{};
    for (std::size_t i = 0; i < N; ++i) {
      const auto terminal = TerminalRewardGradient(final_state, i, cfg);
      c[i][2 * i] = terminal[2 * i];
      c[i][2 * i + 1] = terminal[2 * i + 1] + terminal[2 * i] * (cfg.horizon - t);
    }
    guess.costates.push_back(c);
  }
  return guess;
}

// --- Collocation solver ------------------------------------------------------

struct SolverOptions {
  double tol_res = 1e-3;
  // Mesh refinement aims at refine_fraction * tol_res so that independent
  // re-verification lands below tol_res.
  double refine_fraction = 0.5;
  int max_newton_iterations = 200;
  std::size_t max_nodes = 40000;
  // Fallback when the direct solve fails: geometric stages of the collision
  // penalty from penalty * continuation_start up to the full value.
  bool continuation = true;
  int continuation_stages = 5;
  double continuation_start = 1e-4;
};

namespace detail {

template <std::size_t N>
struct PmpSystem {
  static constexpr int kStates = static_cast<int>(2 * N);
  static constexpr int kDim = static_cast<int>(2 * N + 2 * N * N);
  using Vec = Eigen::Matrix<double, kDim, 1>;
  using Mat = Eigen::Matrix<double, kDim, kDim>;

  GameConfig cfg;
  Thetas<N> theta;
  JointState<N> x0;

  static int CostateIndex(std::size_t i, std::size_t j) {
    return kStates + static_cast<int>(2 * N * i + j);
  }

  JointState<N> State(const Vec& y) const {
    JointState<N> x;
    for (std::size_t j = 0; j < N; ++j) x.agents[j] = {y[2 * j], y[2 * j + 1]};
    return x;
  }

  Actions<N> Controls(const Vec& y) const {
    Actions<N> u{};
    for (std::size_t i = 0; i < N; ++i)
      u[i] = MaximizingAction(y[CostateIndex(i, 2 * i + 1)], cfg.action_min,
                              cfg.action_max);
    return u;
  }

  Vec Rhs(const Vec& y) const {
    Vec f = Vec::Zero();
    const auto u = Controls(y);
    const auto x = State(y);
    for (std::size_t j = 0; j < N; ++j) {
      f[2 * j] = y[2 * j + 1];
      f[2 * j + 1] = u[j];
    }
    for (std::size_t i = 0; i < N; ++i) {
      const auto grad = CollisionGradient(x, theta[i], cfg);
      for (std::size_t j = 0; j < N; ++j) {
        f[CostateIndex(i, 2 * j)] = -grad[j];
        f[CostateIndex(i, 2 * j + 1)] = -y[CostateIndex(i, 2 * j)];
      }
    }
    return f;
  }

  Mat Jacobian(const Vec& y) const {
    Mat jac = Mat::Zero();
    const auto x = State(y);
    for (std::size_t j = 0; j < N; ++j) {
      jac(2 * j, 2 * j + 1) = 1.0;
      const double half = 0.5 * y[CostateIndex(j, 2 * j + 1)];
      if (half > cfg.action_min && half < cfg.action_max)
        jac(2 * j + 1, CostateIndex(j, 2 * j + 1)) = 0.5;
    }
    for (std::size_t i = 0; i < N; ++i) {
      const auto hess = CollisionHessian(x, theta[i], cfg);
      for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t q = 0; q < N; ++q)
          jac(CostateIndex(i, 2 * j), static_cast<int>(2 * q)) = -hess[j * N + q];
        jac(CostateIndex(i, 2 * j + 1), CostateIndex(i, 2 * j)) = -1.0;
      }
    }
    return jac;
  }

  // Left conditions fix the state, right conditions fix the co-states.
  Eigen::VectorXd Boundary(const Vec& ya, const Vec& yb) const {
    Eigen::VectorXd r(kDim);
    for (std::size_t j = 0; j < N; ++j) {
      r[2 * j] = ya[2 * j] - x0.agents[j].d;
      r[2 * j + 1] = ya[2 * j + 1] - x0.agents[j].v;
    }
    const auto xt = State(yb);
    for (std::size_t i = 0; i < N; ++i) {
      const auto terminal = TerminalRewardGradient(xt, i, cfg);
      for (std::size_t j = 0; j < 2 * N; ++j)
        r[CostateIndex(i, j)] = yb[CostateIndex(i, j)] - terminal[j];
    }
    return r;
  }

  std::array<double, N> Rewards(const Vec& y) const {
    return InstantaneousReward(State(y), Controls(y), theta, cfg);
  }
};

// Cubic Hermite interpolant on one interval and its derivative.
template <typename V>
void Hermite(const V& y0, const V& f0, const V& y1, const V& f1, double h,
             double s, V* value, V* slope) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  *value = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0 +
           (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1;
  *slope = (6 * s2 - 6 * s) / h * y0 + (3 * s2 - 4 * s + 1) * f0 +
           (-6 * s2 + 6 * s) / h * y1 + (3 * s2 - 2 * s) * f1;
}

template <std::size_t N>
class CollocationSolver {
 public:
  using Sys = PmpSystem<N>;
  using Vec = typename Sys::Vec;
  using Mat = typename Sys::Mat;
  static constexpr int kDim = Sys::kDim;

  CollocationSolver(Sys sys, const SolverOptions& opts) : sys_(std::move(sys)), opts_(opts) {}

  struct Outcome {
    std::vector<double> times;
    std::vector<Vec> nodes;
    std::vector<std::array<double, N>> values;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::string message;
  };

  Outcome Solve(std::vector<double> times, std::vector<Vec> nodes, int budget) const {
    Outcome out;
    while (true) {
      const bool ok = Newton(times, nodes, budget, &out.iterations);
      if (!ok) {
        out.message = "singular collocation jacobian";
        out.times = times;
        out.nodes = nodes;
        out.values.assign(times.size(), {});
        out.residual = std::numeric_limits<double>::infinity();
        break;
      }
      std::vector<std::array<double, N>> values;
      std::vector<double> rms;
      const double bc = BoundaryResidual(nodes);
      ResidualsAndValues(times, nodes, &values, &rms);
      double worst = 0.0;
      for (double r : rms) worst = std::max(worst, r);
      if (!std::isfinite(worst)) worst = std::numeric_limits<double>::infinity();
      out.residual = std::max(worst, bc);
      out.times = times;
      out.nodes = nodes;
      out.values = values;
      if (worst < opts_.refine_fraction * opts_.tol_res && bc < opts_.tol_res) {
        out.converged = true;
        break;
      }
      if (out.iterations >= budget) {
        out.message = "newton iteration budget exhausted";
        break;
      }
      if (!std::isfinite(worst)) {
        out.message = "non-finite residual";
        break;
      }
      if (!Refine(&times, &nodes, rms)) {
        out.message = "mesh node limit reached";
        break;
      }
    }
    out.converged = out.residual < opts_.tol_res;
    return out;
  }

 private:
  void Evaluate(const std::vector<double>& times, const std::vector<Vec>& y,
                std::vector<Vec>* f, std::vector<Vec>* ymid, std::vector<Vec>* fmid) const {
    const std::size_t m = times.size();
    f->resize(m);
    for (std::size_t k = 0; k < m; ++k) (*f)[k] = sys_.Rhs(y[k]);
    ymid->resize(m ? m - 1 : 0);
    fmid->resize(m ? m - 1 : 0);
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const double h = times[k + 1] - times[k];
      (*ymid)[k] = 0.5 * (y[k] + y[k + 1]) - h / 8.0 * ((*f)[k + 1] - (*f)[k]);
      (*fmid)[k] = sys_.Rhs((*ymid)[k]);
    }
  }

  Eigen::VectorXd Residual(const std::vector<double>& times, const std::vector<Vec>& y) const {
    std::vector<Vec> f, ymid, fmid;
    Evaluate(times, y, &f, &ymid, &fmid);
    const std::size_t m = times.size();
    Eigen::VectorXd r(static_cast<Eigen::Index>(m * kDim));
    const Eigen::VectorXd bc = sys_.Boundary(y.front(), y.back());
    const int left = Sys::kStates;
    r.head(left) = bc.head(left);
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const double h = times[k + 1] - times[k];
      r.segment(left + static_cast<Eigen::Index>(k) * kDim, kDim) =
          y[k + 1] - y[k] - h / 6.0 * (f[k] + 4.0 * fmid[k] + f[k + 1]);
    }
    r.tail(kDim - left) = bc.tail(kDim - left);
    return r;
  }

  Eigen::SparseMatrix<double> Jacobian(const std::vector<double>& times,
                                       const std::vector<Vec>& y) const {
    std::vector<Vec> f, ymid, fmid;
    Evaluate(times, y, &f, &ymid, &fmid);
    const std::size_t m = times.size();
    const auto n = static_cast<Eigen::Index>(m * kDim);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m * kDim * kDim * 2 + kDim * 4);
    const int left = Sys::kStates;
    for (int c = 0; c < left; ++c) trip.emplace_back(c, c, 1.0);
    std::vector<Mat> jac(m);
    for (std::size_t k = 0; k < m; ++k) jac[k] = sys_.Jacobian(y[k]);
    const Mat eye = Mat::Identity();
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const double h = times[k + 1] - times[k];
      const Mat jm = sys_.Jacobian(ymid[k]);
      const Mat a = -eye - h / 6.0 * (jac[k] + 4.0 * jm * (0.5 * eye + h / 8.0 * jac[k]));
      const Mat b = eye - h / 6.0 * (jac[k + 1] + 4.0 * jm * (0.5 * eye - h / 8.0 * jac[k + 1]));
      const auto row = static_cast<Eigen::Index>(left + k * kDim);
      const auto col = static_cast<Eigen::Index>(k * kDim);
      for (int r = 0; r < kDim; ++r)
        for (int c = 0; c < kDim; ++c) {
          if (a(r, c) != 0.0 || r == c) trip.emplace_back(row + r, col + c, a(r, c));
          if (b(r, c) != 0.0 || r == c) trip.emplace_back(row + r, col + kDim + c, b(r, c));
        }
    }
    // Terminal co-state conditions.
    const auto row0 = n - (kDim - left);
    const auto col0 = n - kDim;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < 2 * N; ++j) {
        const int c = Sys::CostateIndex(i, j);
        trip.emplace_back(row0 + c - left, col0 + c, 1.0);
      }
    for (std::size_t i = 0; i < N; ++i)
      trip.emplace_back(row0 + Sys::CostateIndex(i, 2 * i + 1) - left,
                        col0 + static_cast<Eigen::Index>(2 * i + 1), 2.0);
    Eigen::SparseMatrix<double> jmat(n, n);
    jmat.setFromTriplets(trip.begin(), trip.end());
    return jmat;
  }

  static Eigen::VectorXd Flatten(const std::vector<Vec>& y) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(y.size() * kDim));
    for (std::size_t k = 0; k < y.size(); ++k)
      v.segment(static_cast<Eigen::Index>(k * kDim), kDim) = y[k];
    return v;
  }
  static void Unflatten(const Eigen::VectorXd& v, std::vector<Vec>* y) {
    for (std::size_t k = 0; k < y->size(); ++k)
      (*y)[k] = v.segment(static_cast<Eigen::Index>(k * kDim), kDim);
  }

  // Damped Newton with an affine-invariant Armijo test on the Newton step.
  bool Newton(const std::vector<double>& times, std::vector<Vec>& y, int budget,
              int* iterations) const {
    constexpr double kSigma = 0.2;
    constexpr int kMaxTrials = 5;
    constexpr int kPerMesh = 12;
    for (int it = 0; it < kPerMesh && *iterations < budget; ++it) {
      ++*iterations;
      const Eigen::VectorXd r = Residual(times, y);
      if (!r.allFinite()) return false;
      if (StepConverged(times, y, r)) return true;
      Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
      lu.compute(Jacobian(times, y));
      if (lu.info() != Eigen::Success) return false;
      const Eigen::VectorXd step = lu.solve(-r);
      if (!step.allFinite()) return false;
      const double cost = step.squaredNorm();
      const Eigen::VectorXd y0 = Flatten(y);
      double alpha = 1.0;
      bool accepted = false;
      for (int trial = 0; trial < kMaxTrials; ++trial) {
        std::vector<Vec> trial_y(y.size());
        Unflatten(y0 + alpha * step, &trial_y);
        const Eigen::VectorXd r_new = Residual(times, trial_y);
        if (r_new.allFinite()) {
          const double cost_new = lu.solve(r_new).squaredNorm();
          if (cost_new < (1.0 - 2.0 * alpha * kSigma) * cost || trial + 1 == kMaxTrials) {
            y = std::move(trial_y);
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) return false;
      if (alpha == 1.0 && step.cwiseAbs().maxCoeff() < 1e-12 * (1.0 + y0.cwiseAbs().maxCoeff()))
        return true;
    }
    return true;
  }

  // Collocation defects small relative to the local derivative scale.
  bool StepConverged(const std::vector<double>& times, const std::vector<Vec>& y,
                     const Eigen::VectorXd& r) const {
    const int left = Sys::kStates;
    if (r.head(left).cwiseAbs().maxCoeff() > 1e-10) return false;
    if (r.tail(kDim - left).cwiseAbs().maxCoeff() > 1e-10) return false;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
      const double h = times[k + 1] - times[k];
      const Vec fm = sys_.Rhs(0.5 * (y[k] + y[k + 1]));
      const auto seg = r.segment(left + static_cast<Eigen::Index>(k) * kDim, kDim);
      const double tol_r = 2.0 / 3.0 * h * 5e-2 * opts_.tol_res;
      for (int c = 0; c < kDim; ++c)
        if (std::abs(seg[c]) > tol_r * (1.0 + std::abs(fm[c]))) return false;
    }
    return true;
  }

  double BoundaryResidual(const std::vector<Vec>& y) const {
    return sys_.Boundary(y.front(), y.back()).cwiseAbs().maxCoeff();
  }

  // Backward Simpson integration of V' = -f and the RMS relative residual of
  // the cubic interpolant on every interval (states, co-states and values).
  void ResidualsAndValues(const std::vector<double>& times, const std::vector<Vec>& y,
                          std::vector<std::array<double, N>>* values,
                          std::vector<double>* rms) const {
    const std::size_t m = times.size();
    std::vector<Vec> f, ymid, fmid;
    Evaluate(times, y, &f, &ymid, &fmid);
    std::vector<std::array<double, N>> reward(m);
    for (std::size_t k = 0; k < m; ++k) reward[k] = sys_.Rewards(y[k]);
    values->assign(m, {});
    values->back() = TerminalReward(sys_.State(y.back()), sys_.cfg);
    for (std::size_t k = m - 1; k-- > 0;) {
      const double h = times[k + 1] - times[k];
      const auto rm = sys_.Rewards(ymid[k]);
      for (std::size_t i = 0; i < N; ++i)
        (*values)[k][i] = (*values)[k + 1][i] +
                          h / 6.0 * (reward[k][i] + 4.0 * rm[i] + reward[k + 1][i]);
    }
    rms->assign(m ? m - 1 : 0, 0.0);
    const double offset = 0.5 * std::sqrt(3.0 / 7.0);
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const double h = times[k + 1] - times[k];
      double sum_mid = 0.0;
      double sum_side = 0.0;
      for (int p = 0; p < 3; ++p) {
        const double s = p == 0 ? 0.5 : (p == 1 ? 0.5 - offset : 0.5 + offset);
        Vec ys, dys;
        Hermite(y[k], f[k], y[k + 1], f[k + 1], h, s, &ys, &dys);
        const Vec fs = sys_.Rhs(ys);
        double sq = 0.0;
        for (int c = 0; c < kDim; ++c) {
          const double e = (dys[c] - fs[c]) / (1.0 + std::abs(fs[c]));
          sq += e * e;
        }
        const auto rs = sys_.Rewards(ys);
        using V1 = Eigen::Matrix<double, 1, 1>;
        for (std::size_t i = 0; i < N; ++i) {
          V1 v0{(*values)[k][i]}, v1{(*values)[k + 1][i]};
          V1 g0{-reward[k][i]}, g1{-reward[k + 1][i]};
          V1 vs, dvs;
          Hermite(v0, g0, v1, g1, h, s, &vs, &dvs);
          const double e = (dvs[0] + rs[i]) / (1.0 + std::abs(rs[i]));
          sq += e * e;
        }
        if (p == 0) sum_mid += sq; else sum_side += sq;
      }
      (*rms)[k] = std::sqrt(0.5 * (32.0 / 45.0 * sum_mid + 49.0 / 90.0 * sum_side));
    }
  }

  bool Refine(std::vector<double>* times, std::vector<Vec>* y,
              const std::vector<double>& rms) const {
    std::vector<Vec> f(y->size());
    for (std::size_t k = 0; k < y->size(); ++k) f[k] = sys_.Rhs((*y)[k]);
    std::vector<double> new_t;
    std::vector<Vec> new_y;
    std::size_t added = 0;
    for (std::size_t k = 0; k < times->size(); ++k) {
      new_t.push_back((*times)[k]);
      new_y.push_back((*y)[k]);
      if (k + 1 == times->size() || rms[k] <= opts_.refine_fraction * opts_.tol_res) continue;
      const double h = (*times)[k + 1] - (*times)[k];
      const int inserts = rms[k] < 100.0 * opts_.tol_res ? 1 : 2;
      for (int q = 1; q <= inserts; ++q) {
        const double s = static_cast<double>(q) / (inserts + 1);
        Vec ys, dys;
        Hermite((*y)[k], f[k], (*y)[k + 1], f[k + 1], h, s, &ys, &dys);
        new_t.push_back((*times)[k] + s * h);
        new_y.push_back(ys);
        ++added;
      }
    }
    if (added == 0 || new_t.size() > opts_.max_nodes) return false;
    *times = std::move(new_t);
    *y = std::move(new_y);
    return true;
  }

  Sys sys_;
  SolverOptions opts_;
};

template <std::size_t N>
EquilibriumTrajectory<N> ToTrajectory(const PmpSystem<N>& sys,
                                      const typename CollocationSolver<N>::Outcome& out) {
  EquilibriumTrajectory<N> traj;
  traj.theta = sys.theta;
  traj.times = out.times;
  traj.values = out.values;
  traj.converged = out.converged;
  traj.residual_norm = out.residual;
  traj.newton_iterations = out.iterations;
  traj.diagnostics = out.message;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    const auto& y = out.nodes[k];
    auto x = sys.State(y);
    x.t = out.times[k];
    traj.states.push_back(x);
    traj.actions.push_back(sys.Controls(y));
    Costates<N> c{};
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < 2 * N; ++j) c[i][j] = y[PmpSystem<N>::CostateIndex(i, j)];
    traj.costates.push_back(c);
  }
  return traj;
}

}  // namespace detail

template <std::size_t N>
bool IsSymmetricStart(const JointState<N>& x0, const Thetas<N>& theta) {
  for (std::size_t j = 1; j < N; ++j)
    if (!(x0.agents[j] == x0.agents[0]) || theta[j] != theta[0]) return false;
  return true;
}

// Solves the equilibrium BVP from `guess`, which must live on the problem's
// time grid. Non-convergence is reported through `converged` and
// `diagnostics`, never thrown.
template <std::size_t N>
EquilibriumTrajectory<N> SolveBvp(const BvpProblem<N>& prob, const BvpGuess<N>& guess,
                                  const SolverOptions& opts = {}) {
  prob.Validate();
  if (guess.times != prob.time_grid || guess.states.size() != guess.times.size() ||
      guess.costates.size() != guess.times.size())
    throw InvalidGuess("initial guess does not match the problem mesh");

  using Sys = detail::PmpSystem<N>;
  using Vec = typename Sys::Vec;
  std::vector<Vec> nodes(guess.times.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    Vec y = Vec::Zero();
    for (std::size_t j = 0; j < N; ++j) {
      y[2 * j] = guess.states[k].agents[j].d;
      y[2 * j + 1] = guess.states[k].agents[j].v;
    }
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < 2 * N; ++j)
        y[Sys::CostateIndex(i, j)] = guess.costates[k][i][j];
    nodes[k] = y;
  }

  Sys sys{prob.cfg, prob.theta, prob.x0};
  detail::CollocationSolver<N> solver(sys, opts);
  auto out = solver.Solve(prob.time_grid, nodes, opts.max_newton_iterations);
  int used = out.iterations;

  if (!out.converged && opts.continuation && prob.cfg.collision_penalty > 0.0) {
    // Restart from the guess and raise the penalty in stages.
    std::vector<double> times = prob.time_grid;
    std::vector<Vec> y = nodes;
    typename detail::CollocationSolver<N>::Outcome staged;
    bool ok = true;
    const int stages = std::max(1, opts.continuation_stages);
    for (int s = 0; s <= stages && ok; ++s) {
      Sys staged_sys = sys;
      staged_sys.cfg.collision_penalty =
          prob.cfg.collision_penalty *
          std::pow(opts.continuation_start, 1.0 - static_cast<double>(s) / stages);
      detail::CollocationSolver<N> stage_solver(staged_sys, opts);
      staged = stage_solver.Solve(times, y, std::max(1, opts.max_newton_iterations - used));
      used += staged.iterations;
      ok = staged.converged;
      if (ok) {
        times = staged.times;
        y = staged.nodes;
      }
    }
    staged.iterations = used;
    if (ok) {
      out = staged;
    } else {
      out.iterations = used;
      out.message += "; continuation failed";
    }
  }

  auto traj = detail::ToTrajectory(sys, out);
  traj.symmetric_start = IsSymmetricStart(prob.x0, prob.theta);
  if (!traj.converged && traj.diagnostics.empty()) traj.diagnostics = "not converged";
  return traj;
}

// Convenience: conflict-time mesh, heuristic guess, solve.
template <std::size_t N>
EquilibriumTrajectory<N> SolveEquilibrium(const JointState<N>& x0, const Thetas<N>& theta,
                                          const GameConfig& cfg,
                                          const SolverOptions& opts = {},
                                          const MeshOptions& mesh = {}) {
  const auto prob = MakeProblem(x0, theta, cfg, mesh);
  return SolveBvp(prob, BuildInitialGuess(prob), opts);
}

}  // namespace empathy

#endif  // EMPATHY_BVP_HPP_
