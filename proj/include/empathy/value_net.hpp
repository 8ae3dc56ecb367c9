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

// Gated two-branch value network for one aggressiveness pair.
//
//   V(x, t) = out_scale * (eta f1(z) + (1 - eta) f2(z))
//   eta     = sigmoid(gate_slope * (max_j d_j - zone_exit) + gate_bias)
//
// z is the affinely normalized input (d1, v1, d2, v2, t) and each branch is
// fc5-(fc16-tanh)x3-(fc2-tanh). eta approaches 1 once some car has left the
// conflict zone, so f1 models post-passing values and f2 the rest.
//
// Forward evaluation carries tangents along the input directions, which gives
// the exact input Jacobian; training back-propagates through both the values
// and the tangents so the loss can match co-states as well as values.

#ifndef EMPATHY_VALUE_NET_HPP_
#define EMPATHY_VALUE_NET_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <random>
#include <vector>

#include "empathy/bvp.hpp"
#include "empathy/domain.hpp"

namespace empathy {

inline constexpr int kNetInputs = 5;   // d1, v1, d2, v2, t
inline constexpr int kNetOutputs = 2;  // per-agent value
inline constexpr int kNetHidden = 16;
inline constexpr int kStateInputs = 4;  // inputs entering the co-state loss

class EmptySplit : public Error {
 public:
  using Error::Error;
};

// Portable deterministic uniform draws on top of mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  std::size_t Index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

// Heap-free storage bounded by the widest layer.
using NetMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kNetHidden, kNetHidden>;
using NetVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kNetHidden, 1>;
template <int K>
using NetTangents = Eigen::Matrix<double, Eigen::Dynamic, K, 0, kNetHidden, K>;

struct DenseLayer {
  NetMatrix weights;  // out x in
  NetVector bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.weights == b.weights && a.bias == b.bias;
  }
};

struct Branch {
  std::array<DenseLayer, 4> layers;
  friend bool operator==(const Branch&, const Branch&) = default;
};

struct TrainingMeta {
  std::vector<double> loss_history;
  double train_value_rel_mae = std::numeric_limits<double>::quiet_NaN();
  double train_costate_rel_mae = std::numeric_limits<double>::quiet_NaN();
  double test_value_rel_mae = std::numeric_limits<double>::quiet_NaN();
  double test_costate_rel_mae = std::numeric_limits<double>::quiet_NaN();
  int epochs = 0;
  std::uint64_t seed = 0;
  double costate_weight = 1.0;
  double learning_rate = 0.005;
};

struct ValueSurrogate {
  Thetas<2> theta{};
  std::array<Branch, 2> branches;  // f1, f2
  double gate_slope = 1.0;
  double gate_bias = 0.0;
  double zone_exit = 0.0;
  // z_c = (input_c - input_offset_c) * input_scale_c
  std::array<double, kNetInputs> input_offset{};
  std::array<double, kNetInputs> input_scale{1.0, 1.0, 1.0, 1.0, 1.0};
  double output_scale = 1.0;
  TrainingMeta training;

  static ValueSurrogate Zero(const Thetas<2>& theta = {}) {
    ValueSurrogate net;
    net.theta = theta;
    for (auto& br : net.branches) {
      int fan_in = kNetInputs;
      for (int l = 0; l < 4; ++l) {
        const int out = l == 3 ? kNetOutputs : kNetHidden;
        br.layers[static_cast<std::size_t>(l)] = {NetMatrix::Zero(out, fan_in), NetVector::Zero(out)};
        fan_in = out;
      }
    }
    return net;
  }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static ValueSurrogate Random(const Thetas<2>& theta, std::uint64_t seed) {
    ValueSurrogate net = Zero(theta);
    Rng rng(seed);
    for (auto& br : net.branches)
      for (auto& layer : br.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
          for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
            layer.weights(r, c) = rng.Uniform(-bound, bound);
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = rng.Uniform(-bound, bound);
      }
    return net;
  }

  std::size_t NumParameters() const {
    std::size_t n = 2;
    for (const auto& br : branches)
      for (const auto& l : br.layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }

  // Flat parameter order: branch 1 then branch 2, each layer's weights
  // (row-major) then bias; finally gate slope and gate bias.
  Eigen::VectorXd Parameters() const {
    Eigen::VectorXd p(static_cast<Eigen::Index>(NumParameters()));
    Eigen::Index k = 0;
    for (const auto& br : branches)
      for (const auto& l : br.layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
          for (Eigen::Index c = 0; c < l.weights.cols(); ++c) p[k++] = l.weights(r, c);
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) p[k++] = l.bias[r];
      }
    p[k++] = gate_slope;
    p[k++] = gate_bias;
    return p;
  }

  void SetParameters(const Eigen::VectorXd& p) {
    if (p.size() != static_cast<Eigen::Index>(NumParameters()))
      throw Error("parameter vector has the wrong size");
    Eigen::Index k = 0;
    for (auto& br : branches)
      for (auto& l : br.layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
          for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = p[k++];
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = p[k++];
      }
    gate_slope = p[k++];
    gate_bias = p[k++];
  }
};

inline std::array<double, kNetInputs> NetInput(const JointState<2>& x) {
  return {x.agents[0].d, x.agents[0].v, x.agents[1].d, x.agents[1].v, x.t};
}

namespace net_detail {

using InVec = Eigen::Matrix<double, kNetInputs, 1>;

// Activations and input tangents of one branch for K tangent directions
// (the first K normalized inputs).
template <int K>
struct BranchPass {
  std::array<NetVector, 5> h;        // h[0] = z
  std::array<NetTangents<K>, 5> dh;  // dh[0] = selection
  std::array<NetTangents<K>, 5> dpre;
};

template <int K>
void RunBranch(const Branch& br, const NetVector& z, BranchPass<K>* pass) {
  pass->h[0] = z;
  pass->dh[0] = NetTangents<K>::Zero(kNetInputs, K);
  for (int c = 0; c < K; ++c) pass->dh[0](c, c) = 1.0;
  for (std::size_t l = 0; l < 4; ++l) {
    const auto& layer = br.layers[l];
    const NetVector pre = layer.weights * pass->h[l] + layer.bias;
    pass->h[l + 1] = pre.array().tanh().matrix();
    pass->dpre[l + 1].noalias() = layer.weights * pass->dh[l];
    const NetVector slope = (1.0 - pass->h[l + 1].array().square()).matrix();
    pass->dh[l + 1] = (pass->dpre[l + 1].array().colwise() * slope.array()).matrix();
  }
}

struct Gate {
  double eta = 0.0;
  double deta_dm = 0.0;  // derivative with respect to max_j d_j
  std::size_t argmax = 0;
  double margin = 0.0;   // max_j d_j - zone_exit
};

inline Gate EvalGate(const ValueSurrogate& net, const std::array<double, kNetInputs>& in) {
  Gate g;
  g.argmax = in[2] > in[0] ? 1 : 0;
  g.margin = std::max(in[0], in[2]) - net.zone_exit;
  g.eta = Sigmoid(net.gate_slope * g.margin + net.gate_bias);
  g.deta_dm = g.eta * (1.0 - g.eta) * net.gate_slope;
  return g;
}

inline NetVector Normalize(const ValueSurrogate& net, const std::array<double, kNetInputs>& in) {
  NetVector z(kNetInputs);
  for (int c = 0; c < kNetInputs; ++c)
    z[c] = (in[static_cast<std::size_t>(c)] - net.input_offset[static_cast<std::size_t>(c)]) *
           net.input_scale[static_cast<std::size_t>(c)];
  return z;
}

}  // namespace net_detail

struct NetOutput {
  std::array<double, kNetOutputs> value{};
  // Physical gradient dV_i / d(d1, v1, d2, v2, t).
  std::array<std::array<double, kNetInputs>, kNetOutputs> gradient{};
  double gate = 0.0;
};

// Value and exact input gradient in physical units.
inline NetOutput EvaluateWithGradient(const ValueSurrogate& net, const JointState<2>& x) {
  using namespace net_detail;
  const auto in = NetInput(x);
  const NetVector z = Normalize(net, in);
  BranchPass<kNetInputs> p1, p2;
  RunBranch<kNetInputs>(net.branches[0], z, &p1);
  RunBranch<kNetInputs>(net.branches[1], z, &p2);
  const Gate g = EvalGate(net, in);
  NetOutput out;
  out.gate = g.eta;
  for (int i = 0; i < kNetOutputs; ++i) {
    const double o1 = p1.h[4][i], o2 = p2.h[4][i];
    out.value[static_cast<std::size_t>(i)] = net.output_scale * (g.eta * o1 + (1.0 - g.eta) * o2);
    for (int c = 0; c < kNetInputs; ++c) {
      const double dz = g.eta * p1.dh[4](i, c) + (1.0 - g.eta) * p2.dh[4](i, c);
      double grad = net.output_scale * dz * net.input_scale[static_cast<std::size_t>(c)];
      if (c == static_cast<int>(2 * g.argmax)) grad += net.output_scale * (o1 - o2) * g.deta_dm;
      out.gradient[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = grad;
    }
  }
  return out;
}

inline std::array<double, kNetOutputs> Forward(const ValueSurrogate& net, const JointState<2>& x) {
  using namespace net_detail;
  const auto in = NetInput(x);
  const NetVector z = Normalize(net, in);
  std::array<double, kNetOutputs> out{};
  std::array<NetVector, 2> o;
  for (std::size_t b = 0; b < 2; ++b) {
    NetVector h = z;
    for (const auto& layer : net.branches[b].layers) {
      const NetVector pre = layer.weights * h + layer.bias;
      h = pre.array().tanh().matrix();
    }
    o[b] = h;
  }
  const Gate g = EvalGate(net, in);
  for (int i = 0; i < kNetOutputs; ++i)
    out[static_cast<std::size_t>(i)] = net.output_scale * (g.eta * o[0][i] + (1.0 - g.eta) * o[1][i]);
  return out;
}

inline std::array<std::array<double, kNetInputs>, kNetOutputs> InputGradient(
    const ValueSurrogate& net, const JointState<2>& x) {
  return EvaluateWithGradient(net, x).gradient;
}

// --- Training data and loss --------------------------------------------------

enum class Split : int { kTrain = 0, kTest = 1 };

struct ValueRecord {
  JointState<2> x;  // includes t
  Thetas<2> theta{};
  std::array<double, 2> value{};
  Costates<2> costate{};
  Split split = Split::kTrain;
  int trajectory = -1;
};

// Loss of one record divided by output_scale^2: values and state gradients
// (t excluded) in physical units, both scaled by 1 / output_scale.
//
//   |V - V*|^2 + C |grad V - grad V*|^2
//
// When `grad` is non-null the parameter gradient is accumulated into it.
inline double RecordLoss(const ValueSurrogate& net, const ValueRecord& rec, double C,
                         Eigen::VectorXd* grad) {
  using namespace net_detail;
  constexpr int K = kStateInputs;
  const auto in = NetInput(rec.x);
  const NetVector z = Normalize(net, in);
  std::array<BranchPass<K>, 2> pass;
  RunBranch<K>(net.branches[0], z, &pass[0]);
  RunBranch<K>(net.branches[1], z, &pass[1]);
  const Gate g = EvalGate(net, in);
  // d eta / d z_c for the gated coordinate.
  const std::size_t gate_coord = 2 * g.argmax;
  const double dz_scale = 1.0 / net.input_scale[gate_coord];
  const double eta_z = g.deta_dm * dz_scale;

  const auto& o1 = pass[0].h[4];
  const auto& o2 = pass[1].h[4];
  const auto& d1 = pass[0].dh[4];
  const auto& d2 = pass[1].dh[4];
  Eigen::Vector2d rv;
  Eigen::Matrix<double, 2, K> rg;
  for (int i = 0; i < 2; ++i) {
    rv[i] = g.eta * o1[i] + (1.0 - g.eta) * o2[i] - rec.value[static_cast<std::size_t>(i)] / net.output_scale;
    for (int c = 0; c < K; ++c) {
      double net_grad = g.eta * d1(i, c) + (1.0 - g.eta) * d2(i, c);
      if (c == static_cast<int>(gate_coord)) net_grad += (o1[i] - o2[i]) * eta_z;
      const auto cc = static_cast<std::size_t>(c);
      rg(i, c) = net.input_scale[cc] * net_grad -
                 rec.costate[static_cast<std::size_t>(i)][cc] / net.output_scale;
    }
  }
  const double loss = rv.squaredNorm() + C * rg.squaredNorm();
  if (!grad) return loss;

  // Adjoints of the combined output.
  const Eigen::Vector2d a_net = 2.0 * rv;
  Eigen::Matrix<double, 2, K> a_dnet = 2.0 * C * rg;
  for (int c = 0; c < K; ++c) a_dnet.col(c) *= net.input_scale[static_cast<std::size_t>(c)];
  const Eigen::Vector2d a_gcol = a_dnet.col(static_cast<Eigen::Index>(gate_coord));
  double a_eta = a_net.dot(o1 - o2) + (a_dnet.array() * (d1 - d2).array()).sum();
  const double a_eta_z = a_gcol.dot(o1 - o2);

  std::array<NetVector, 2> a_out;
  std::array<NetTangents<K>, 2> a_dout;
  a_out[0] = g.eta * a_net;
  a_out[1] = (1.0 - g.eta) * a_net;
  a_out[0] += eta_z * a_gcol;
  a_out[1] -= eta_z * a_gcol;
  a_dout[0] = g.eta * a_dnet;
  a_dout[1] = (1.0 - g.eta) * a_dnet;

  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < 2; ++b) {
    const auto& br = net.branches[b];
    const auto& p = pass[b];
    // Parameter offsets of each layer inside this branch.
    std::array<Eigen::Index, 4> starts{};
    Eigen::Index k = offset;
    for (std::size_t l = 0; l < 4; ++l) {
      starts[l] = k;
      k += br.layers[l].weights.size() + br.layers[l].bias.size();
    }
    offset = k;
    NetVector a_h = a_out[b];
    NetTangents<K> a_dh = a_dout[b];
    for (std::size_t l = 4; l-- > 0;) {
      const auto& layer = br.layers[l];
      const NetVector slope = (1.0 - p.h[l + 1].array().square()).matrix();
      const NetTangents<K> a_dpre = (a_dh.array().colwise() * slope.array()).matrix();
      const NetVector a_slope = (a_dh.array() * p.dpre[l + 1].array()).rowwise().sum().matrix();
      const NetVector a_pre =
          ((a_h.array() - 2.0 * p.h[l + 1].array() * a_slope.array()) * slope.array()).matrix();
      NetMatrix gw = a_pre * p.h[l].transpose();
      gw.noalias() += a_dpre * p.dh[l].transpose();
      Eigen::Index q = starts[l];
      for (Eigen::Index r = 0; r < gw.rows(); ++r)
        for (Eigen::Index c = 0; c < gw.cols(); ++c) (*grad)[q++] += gw(r, c);
      for (Eigen::Index r = 0; r < a_pre.size(); ++r) (*grad)[q++] += a_pre[r];
      if (l > 0) {
        a_h.noalias() = layer.weights.transpose() * a_pre;
        a_dh.noalias() = layer.weights.transpose() * a_dpre;
      }
    }
  }
  // Gate parameters: eta = s(k m + b), eta_z = eta (1 - eta) k / input_scale.
  const double s = g.eta * (1.0 - g.eta);
  const double deta_dk = s * g.margin;
  const double deta_db = s;
  const double deta_z_dk = ((1.0 - 2.0 * g.eta) * deta_dk * net.gate_slope + s) * dz_scale;
  const double deta_z_db = (1.0 - 2.0 * g.eta) * s * net.gate_slope * dz_scale;
  (*grad)[offset] += a_eta * deta_dk + a_eta_z * deta_z_dk;
  (*grad)[offset + 1] += a_eta * deta_db + a_eta_z * deta_z_db;
  return loss;
}

// Mean record loss over a batch.
inline double Loss(const ValueSurrogate& net, const std::vector<ValueRecord>& batch, double C,
                   Eigen::VectorXd* grad = nullptr) {
  if (grad) *grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.NumParameters()));
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& rec : batch) total += RecordLoss(net, rec, C, grad);
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grad) *grad *= inv;
  return total * inv;
}

struct Accuracy {
  double value_rel_mae = 0.0;
  double costate_rel_mae = 0.0;
};

// Relative MAE = mean |prediction - target| / mean |target|, over both agents;
// co-states over the four state coordinates.
inline Accuracy Evaluate(const ValueSurrogate& net, const std::vector<ValueRecord>& records) {
  double err_v = 0, tgt_v = 0, err_c = 0, tgt_c = 0;
  for (const auto& rec : records) {
    const auto out = EvaluateWithGradient(net, rec.x);
    for (std::size_t i = 0; i < 2; ++i) {
      err_v += std::abs(out.value[i] - rec.value[i]);
      tgt_v += std::abs(rec.value[i]);
      for (std::size_t c = 0; c < kStateInputs; ++c) {
        err_c += std::abs(out.gradient[i][c] - rec.costate[i][c]);
        tgt_c += std::abs(rec.costate[i][c]);
      }
    }
  }
  Accuracy acc;
  acc.value_rel_mae = tgt_v > 0 ? err_v / tgt_v : (err_v > 0 ? INFINITY : 0.0);
  acc.costate_rel_mae = tgt_c > 0 ? err_c / tgt_c : (err_c > 0 ? INFINITY : 0.0);
  return acc;
}

struct TrainOptions {
  double costate_weight = 1.0;  // C
  double learning_rate = 0.005;
  int epochs = 1500;
  std::size_t batch_size = 64;  // 0 = full batch
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Halve the learning rate this many times, evenly over training.
  int lr_halvings = 3;
};

// Fits the surrogate for `theta` on the records of that pair. Input
// normalization maps the training range of every input to [-1, 1]; values are
// divided by 1.1 max |V*| so that targets sit inside the tanh range.
inline ValueSurrogate Train(const std::vector<ValueRecord>& dataset, const Thetas<2>& theta,
                            const GameConfig& cfg, const TrainOptions& opts) {
  std::vector<ValueRecord> train, test;
  for (const auto& r : dataset) {
    if (r.theta != theta) continue;
    (r.split == Split::kTrain ? train : test).push_back(r);
  }
  if (train.empty()) throw EmptySplit("no training records for this aggressiveness pair");

  ValueSurrogate net = ValueSurrogate::Random(theta, opts.seed);
  net.zone_exit = cfg.ZoneExit();
  std::array<double, kNetInputs> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  double vmax = 0.0;
  for (const auto& r : train) {
    const auto in = NetInput(r.x);
    for (std::size_t c = 0; c < kNetInputs; ++c) {
      lo[c] = std::min(lo[c], in[c]);
      hi[c] = std::max(hi[c], in[c]);
    }
    vmax = std::max({vmax, std::abs(r.value[0]), std::abs(r.value[1])});
  }
  for (std::size_t c = 0; c < kNetInputs; ++c) {
    const double span = hi[c] - lo[c];
    net.input_offset[c] = 0.5 * (hi[c] + lo[c]);
    net.input_scale[c] = span > 1e-9 ? 2.0 / span : 1.0;
  }
  net.output_scale = vmax > 0.0 ? 1.1 * vmax : 1.0;

  Eigen::VectorXd params = net.Parameters();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
  Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(train.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  const std::size_t batch =
      opts.batch_size == 0 ? train.size() : std::min(opts.batch_size, train.size());
  std::vector<ValueRecord> chunk;
  chunk.reserve(batch);
  Eigen::VectorXd grad;
  long step = 0;
  const int stage = opts.lr_halvings > 0 ? std::max(1, opts.epochs / (opts.lr_halvings + 1)) : 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const double lr =
        opts.learning_rate * (stage ? std::pow(0.5, std::min(opts.lr_halvings, epoch / stage)) : 1.0);
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.Index(k)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      chunk.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + batch); ++k)
        chunk.push_back(train[order[k]]);
      epoch_loss += Loss(net, chunk, opts.costate_weight, &grad) * static_cast<double>(chunk.size());
      ++step;
      m = opts.beta1 * m + (1.0 - opts.beta1) * grad;
      v = opts.beta2 * v + (1.0 - opts.beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
      params -= (lr * (m / c1).array() / ((v / c2).array().sqrt() + opts.adam_epsilon)).matrix();
      net.SetParameters(params);
    }
    net.training.loss_history.push_back(epoch_loss / static_cast<double>(train.size()));
  }

  net.training.epochs = opts.epochs;
  net.training.seed = opts.seed;
  net.training.costate_weight = opts.costate_weight;
  net.training.learning_rate = opts.learning_rate;
  const auto tr = Evaluate(net, train);
  net.training.train_value_rel_mae = tr.value_rel_mae;
  net.training.train_costate_rel_mae = tr.costate_rel_mae;
  if (!test.empty()) {
    const auto te = Evaluate(net, test);
    net.training.test_value_rel_mae = te.value_rel_mae;
    net.training.test_costate_rel_mae = te.costate_rel_mae;
  }
  return net;
}

// "a_na" style tag of an aggressiveness pair.
inline std::string ThetaPairName(const Thetas<2>& theta) {
  auto name = [](double t) { return t == ThetaValue(Aggressiveness::kAggressive) ? "a" : "na"; };
  return std::string(name(theta[0])) + "_" + name(theta[1]);
}

class MissingSurrogate : public Error {
 public:
  using Error::Error;
};

// Trained surrogates keyed by their aggressiveness pair. Read-only after
// construction, so one set can be shared across concurrent simulations.
class SurrogateSet {
 public:
  void Add(ValueSurrogate net) {
    const auto key = net.theta;
    nets_.insert_or_assign(key, std::move(net));
  }
  bool Contains(const Thetas<2>& theta) const { return nets_.count(theta) > 0; }
  const ValueSurrogate& Get(const Thetas<2>& theta) const {
    auto it = nets_.find(theta);
    if (it == nets_.end())
      throw MissingSurrogate("no value surrogate for aggressiveness (" + FormatTheta(theta[0]) +
                             ", " + FormatTheta(theta[1]) + ")");
    return it->second;
  }
  std::size_t size() const { return nets_.size(); }
  const std::map<Thetas<2>, ValueSurrogate>& all() const { return nets_; }

 private:
  static std::string FormatTheta(double t) {
    std::ostringstream ss;
    ss << t;
    return ss.str();
  }
  std::map<Thetas<2>, ValueSurrogate> nets_;
};

}  // namespace empathy

#endif  // EMPATHY_VALUE_NET_HPP_
