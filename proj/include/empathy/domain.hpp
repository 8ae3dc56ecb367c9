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

// Two-car uncontrolled intersection game: state and action spaces, rewards,
// dynamics and Hamiltonian. Agents drive along straight roads that cross in a
// single conflict zone; each agent's state is (position d, velocity v) and its
// action is a longitudinal acceleration.
//
// All functions here are pure and templated on the number of agents N. The
// experiments only ever use N = 2.

#ifndef EMPATHY_DOMAIN_HPP_
#define EMPATHY_DOMAIN_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace empathy {

inline constexpr std::size_t kNumAgents = 2;

// Base error type for the library. Modules derive more specific errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kActionMin = -5.0;
inline constexpr double kActionMax = 10.0;

// Aggressiveness theta. Aggressive agents are less sensitive to close
// distances: their zone-entry boundary sits closer to the zone center.
enum class Aggressiveness : int { kAggressive = 0, kNonAggressive = 1 };
// Rationality lambda of the Boltzmann action model.
enum class Rationality : int { kNoisy = 0, kLessNoisy = 1 };

inline constexpr double ThetaValue(Aggressiveness a) {
  return a == Aggressiveness::kAggressive ? 1.0 : 5.0;
}
inline constexpr double LambdaValue(Rationality r) {
  return r == Rationality::kNoisy ? 0.1 : 0.5;
}
inline const char* ShortName(Aggressiveness a) {
  return a == Aggressiveness::kAggressive ? "a" : "na";
}
inline const char* ShortName(Rationality r) {
  return r == Rationality::kNoisy ? "n" : "ln";
}

// One agent's private parameter pair.
struct AgentParams {
  Aggressiveness aggressiveness = Aggressiveness::kNonAggressive;
  Rationality rationality = Rationality::kLessNoisy;

  double theta() const { return ThetaValue(aggressiveness); }
  double lambda() const { return LambdaValue(rationality); }

  // Position in the per-axis order (a,n), (a,ln), (na,n), (na,ln).
  int index() const {
    return 2 * static_cast<int>(aggressiveness) + static_cast<int>(rationality);
  }
  static AgentParams FromIndex(int index) {
    if (index < 0 || index > 3) throw Error("agent parameter index out of range");
    return {static_cast<Aggressiveness>(index / 2),
            static_cast<Rationality>(index % 2)};
  }
  std::string name() const {
    return std::string("(") + ShortName(aggressiveness) + "," +
           ShortName(rationality) + ")";
  }
  friend bool operator==(const AgentParams&, const AgentParams&) = default;
};

inline constexpr int kParamsPerAgent = 4;

struct AgentState {
  double d = 0.0;  // position along the agent's road (m)
  double v = 0.0;  // velocity (m/s)
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

template <std::size_t N = kNumAgents>
struct JointState {
  std::array<AgentState, N> agents{};
  double t = 0.0;
  friend bool operator==(const JointState&, const JointState&) = default;
};

template <std::size_t N = kNumAgents>
using Actions = std::array<double, N>;

// Per-agent aggressiveness values theta_i.
template <std::size_t N = kNumAgents>
using Thetas = std::array<double, N>;

// A vector over the joint state ordered (d_1, v_1, d_2, v_2, ...).
template <std::size_t N = kNumAgents>
using StateVector = std::array<double, 2 * N>;

struct GameConfig {
  double collision_penalty = 1e4;  // b
  double sigmoid_shape = 10.0;     // gamma
  double progress_weight = 1e-6;   // alpha
  double road_length = 70.0;       // R
  double car_length = 3.0;         // L
  double car_width = 1.5;          // W
  double reference_velocity = 18.0;
  double horizon = 3.0;
  double dt = 0.05;
  double action_min = kActionMin;
  double action_max = kActionMax;
  double action_step = 0.5;
  double epsilon = 0.05;  // belief learning rate
  std::size_t num_agents = kNumAgents;

  // Midpoint of the entry sigmoid for aggressiveness theta.
  double ZoneEntry(double theta) const {
    return road_length / 2.0 - theta * car_width / 2.0;
  }
  // Midpoint of the exit sigmoid.
  double ZoneExit() const {
    return road_length / 2.0 + car_width / 2.0 + car_length;
  }
  std::size_t NumSteps() const {
    return static_cast<std::size_t>(std::llround(horizon / dt));
  }

  std::vector<double> ActionGrid() const {
    std::vector<double> grid;
    const auto cells = static_cast<std::size_t>(
        std::floor((action_max - action_min) / action_step + 1e-9));
    grid.reserve(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) {
      grid.push_back(action_min + static_cast<double>(k) * action_step);
    }
    return grid;
  }

  void Validate() const {
    auto fail = [](const std::string& what) {
      throw ConfigError("invalid game config: " + what);
    };
    if (!(collision_penalty >= 0.0)) fail("collision_penalty must be >= 0");
    if (!(sigmoid_shape > 0.0)) fail("sigmoid_shape must be > 0");
    if (!(progress_weight > 0.0)) fail("progress_weight must be > 0");
    if (!(car_length > 0.0) || !(car_width > 0.0)) fail("car size must be > 0");
    if (!(road_length > car_width + 2.0 * car_length))
      fail("road_length must exceed car_width + 2 car_length");
    if (!(horizon >= 0.0)) fail("horizon must be >= 0");
    if (!(dt > 0.0)) fail("dt must be > 0");
    if (std::abs(horizon / dt - std::round(horizon / dt)) > 1e-9)
      fail("horizon must be a multiple of dt");
    if (!(action_step > 0.0)) fail("action_step must be > 0");
    if (action_min < kActionMin || action_max > kActionMax ||
        !(action_min <= action_max))
      fail("action grid must lie within [-5, 10]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("epsilon must be in [0, 1]");
    if (num_agents != kNumAgents) fail("only two agents are supported");
  }
};

// Logistic function without overflow for large |z|.
inline double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Entry sigmoid: rises from 0 to 1 as the car reaches the zone.
inline double EntrySigmoid(double d, double theta, const GameConfig& cfg) {
  return Sigmoid(cfg.sigmoid_shape * (d - cfg.ZoneEntry(theta)));
}

// Exit sigmoid: falls from 1 to 0 as the car leaves the zone.
inline double ExitSigmoid(double d, const GameConfig& cfg) {
  return Sigmoid(-cfg.sigmoid_shape * (d - cfg.ZoneExit()));
}

// Soft zone occupancy g(d) = entry(d) * exit(d) and its first two derivatives.
struct Occupancy {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline Occupancy ZoneOccupancy(double d, double theta, const GameConfig& cfg) {
  const double k = cfg.sigmoid_shape;
  const double s1 = EntrySigmoid(d, theta, cfg);
  const double s2 = ExitSigmoid(d, cfg);
  // s1' = k s1 (1 - s1), s2' = -k s2 (1 - s2).
  const double ds1 = k * s1 * (1.0 - s1);
  const double ds2 = -k * s2 * (1.0 - s2);
  const double dds1 = k * ds1 * (1.0 - 2.0 * s1);
  const double dds2 = -k * ds2 * (1.0 - 2.0 * s2);
  return {s1 * s2, ds1 * s2 + s1 * ds2, dds1 * s2 + 2.0 * ds1 * ds2 + s1 * dds2};
}

template <std::size_t N>
std::array<double, 2 * N> ToVector(const JointState<N>& x) {
  std::array<double, 2 * N> out{};
  for (std::size_t j = 0; j < N; ++j) {
    out[2 * j] = x.agents[j].d;
    out[2 * j + 1] = x.agents[j].v;
  }
  return out;
}

template <std::size_t N>
JointState<N> FromVector(const std::array<double, 2 * N>& y, double t) {
  JointState<N> x;
  for (std::size_t j = 0; j < N; ++j) x.agents[j] = {y[2 * j], y[2 * j + 1]};
  x.t = t;
  return x;
}

template <std::size_t N>
JointState<N> SwapAgents(const JointState<N>& x) {
  static_assert(N == 2, "agent swap is defined for two agents");
  return {{x.agents[1], x.agents[0]}, x.t};
}

// State derivative (d', v') = (v, u) for every agent.
template <std::size_t N>
std::array<AgentState, N> DynamicsRhs(const JointState<N>& x,
                                      const Actions<N>& u) {
  std::array<AgentState, N> out{};
  for (std::size_t j = 0; j < N; ++j) out[j] = {x.agents[j].v, u[j]};
  return out;
}

// Exact double-integrator step under constant acceleration over dt.
template <std::size_t N>
JointState<N> DynamicsStep(const JointState<N>& x, const Actions<N>& u,
                           double dt) {
  JointState<N> next = x;
  for (std::size_t j = 0; j < N; ++j) {
    const auto& a = x.agents[j];
    next.agents[j] = {a.d + a.v * dt + 0.5 * u[j] * dt * dt, a.v + u[j] * dt};
  }
  next.t = x.t + dt;
  return next;
}

inline double EffortReward(double u) { return -u * u; }

// Collision loss of an agent with aggressiveness theta_i. For two agents this
// is -b * entry(d1) exit(d2) * entry(d2) exit(d1), i.e. -b g(d1) g(d2); with
// more agents the pairwise products are summed.
template <std::size_t N>
double CollisionLoss(const JointState<N>& x, double theta_i,
                     const GameConfig& cfg) {
  std::array<double, N> g{};
  for (std::size_t j = 0; j < N; ++j)
    g[j] = ZoneOccupancy(x.agents[j].d, theta_i, cfg).value;
  double total = 0.0;
  for (std::size_t p = 0; p < N; ++p)
    for (std::size_t q = p + 1; q < N; ++q) total += g[p] * g[q];
  return -cfg.collision_penalty * total;
}

// Gradient of CollisionLoss with respect to each position d_j.
template <std::size_t N>
std::array<double, N> CollisionGradient(const JointState<N>& x, double theta_i,
                                        const GameConfig& cfg) {
  std::array<Occupancy, N> g{};
  for (std::size_t j = 0; j < N; ++j)
    g[j] = ZoneOccupancy(x.agents[j].d, theta_i, cfg);
  std::array<double, N> out{};
  for (std::size_t j = 0; j < N; ++j) {
    double others = 0.0;
    for (std::size_t q = 0; q < N; ++q)
      if (q != j) others += g[q].value;
    out[j] = -cfg.collision_penalty * g[j].d1 * others;
  }
  return out;
}

// Hessian of CollisionLoss in positions, row-major N x N.
template <std::size_t N>
std::array<double, N * N> CollisionHessian(const JointState<N>& x,
                                           double theta_i,
                                           const GameConfig& cfg) {
  std::array<Occupancy, N> g{};
  for (std::size_t j = 0; j < N; ++j)
    g[j] = ZoneOccupancy(x.agents[j].d, theta_i, cfg);
  std::array<double, N * N> out{};
  for (std::size_t j = 0; j < N; ++j) {
    double others = 0.0;
    for (std::size_t q = 0; q < N; ++q)
      if (q != j) others += g[q].value;
    out[j * N + j] = -cfg.collision_penalty * g[j].d2 * others;
    for (std::size_t q = 0; q < N; ++q)
      if (q != j) out[j * N + q] = -cfg.collision_penalty * g[j].d1 * g[q].d1;
  }
  return out;
}

// f_i = effort(u_i) + collision(x; theta_i) for every agent i.
template <std::size_t N>
std::array<double, N> InstantaneousReward(const JointState<N>& x,
                                          const Actions<N>& u,
                                          const Thetas<N>& theta,
                                          const GameConfig& cfg) {
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i)
    out[i] = EffortReward(u[i]) + CollisionLoss(x, theta[i], cfg);
  return out;
}

// c_i = alpha d_i - (v_i - v0)^2.
template <std::size_t N>
std::array<double, N> TerminalReward(const JointState<N>& x,
                                     const GameConfig& cfg) {
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    const double dv = x.agents[i].v - cfg.reference_velocity;
    out[i] = cfg.progress_weight * x.agents[i].d - dv * dv;
  }
  return out;
}

// Gradient of f_i with respect to the joint state vector. Actions are held
// fixed, so only the collision term contributes.
template <std::size_t N>
StateVector<N> InstantaneousRewardGradient(const JointState<N>& x,
                                           double theta_i,
                                           const GameConfig& cfg) {
  const auto dc = CollisionGradient(x, theta_i, cfg);
  StateVector<N> out{};
  for (std::size_t j = 0; j < N; ++j) out[2 * j] = dc[j];
  return out;
}

template <std::size_t N>
StateVector<N> TerminalRewardGradient(const JointState<N>& x, std::size_t i,
                                      const GameConfig& cfg) {
  StateVector<N> out{};
  out[2 * i] = cfg.progress_weight;
  out[2 * i + 1] = -2.0 * (x.agents[i].v - cfg.reference_velocity);
  return out;
}

// H_i = lambda_i . h(x, u) + f_i(x, u; theta), with lambda_i the gradient of
// agent i's value with respect to the joint state.
template <std::size_t N>
double Hamiltonian(const JointState<N>& x, const Actions<N>& u,
                   const StateVector<N>& costate_i, const Thetas<N>& theta,
                   std::size_t i, const GameConfig& cfg) {
  double h = 0.0;
  for (std::size_t j = 0; j < N; ++j)
    h += costate_i[2 * j] * x.agents[j].v + costate_i[2 * j + 1] * u[j];
  return h + EffortReward(u[i]) + CollisionLoss(x, theta[i], cfg);
}

// Maximizer of H_i over the action box for a quadratic effort cost.
inline double MaximizingAction(double own_velocity_costate, double lo = kActionMin,
                               double hi = kActionMax) {
  const double u = 0.5 * own_velocity_costate;
  return u < lo ? lo : (u > hi ? hi : u);
}

inline double ClampAction(double u) {
  return u < kActionMin ? kActionMin : (u > kActionMax ? kActionMax : u);
}

}  // namespace empathy

#endif  // EMPATHY_DOMAIN_HPP_
