/*
 * Copyright 2026 The msngo Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/random.hpp"
#include "msngo/tensor.hpp"

namespace msngo {

enum class ActivationKind { relu, leaky_relu, sigmoid, tanh };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.2;  // leaky_relu only

  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double slope = 0.2) { return {ActivationKind::leaky_relu, slope}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
  static Activation tanh() { return {ActivationKind::tanh, 0.0}; }
  friend bool operator==(const Activation&, const Activation&) = default;
};

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu();
  if (name == "leaky_relu") return Activation::leaky_relu();
  if (name == "sigmoid") return Activation::sigmoid();
  if (name == "tanh") return Activation::tanh();
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double activate(double x, const Activation& a) {
  switch (a.kind) {
    case ActivationKind::relu: return x < 0 ? 0.0 : x;  // NaN passes through
    case ActivationKind::leaky_relu: return x > 0 ? x : a.slope * x;
    case ActivationKind::sigmoid: return sigmoid(x);
    case ActivationKind::tanh: return std::tanh(x);
  }
  return x;
}

// Derivative expressed through the pre-activation x and the output y.
inline double activate_derivative(double x, double y, const Activation& a) {
  switch (a.kind) {
    case ActivationKind::relu: return x > 0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu: return x > 0 ? 1.0 : a.slope;
    case ActivationKind::sigmoid: return y * (1.0 - y);
    case ActivationKind::tanh: return 1.0 - y * y;
  }
  return 1.0;
}

inline DenseMatrix activation(const DenseMatrix& x, const Activation& a) {
  DenseMatrix y = x;
  for (double& v : y.values()) v = activate(v, a);
  return y;
}

inline DenseMatrix activation_backward(const DenseMatrix& grad_y, const DenseMatrix& x,
                                       const DenseMatrix& y, const Activation& a) {
  if (!grad_y.same_shape(x) || !x.same_shape(y)) {
    throw DimensionError("activation_backward: shape mismatch");
  }
  DenseMatrix g = grad_y;
  auto gv = g.values();
  for (std::size_t i = 0; i < gv.size(); ++i)
    gv[i] *= activate_derivative(x.values()[i], y.values()[i], a);
  return g;
}

// ---------------------------------------------------------------------------
// Layer normalization over each row, followed by a per-column affine map.

struct LayerNormCache {
  DenseMatrix normalized;        // pre-affine
  std::vector<double> inv_std;   // per row
};

inline constexpr double kLayerNormEpsilon = 1e-5;

inline DenseMatrix layer_norm(const DenseMatrix& x, const DenseMatrix& gain, const DenseMatrix& bias,
                              LayerNormCache* cache = nullptr, double eps = kLayerNormEpsilon) {
  if (gain.rows() != 1 || bias.rows() != 1 || gain.cols() != x.cols() || bias.cols() != x.cols()) {
    throw DimensionError("layer_norm: gain/bias must be 1x" + std::to_string(x.cols()));
  }
  const std::size_t d = x.cols();
  DenseMatrix y(x.rows(), d);
  DenseMatrix normalized(x.rows(), d);
  std::vector<double> inv_std(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double n = (r[j] - mean) * is;
      normalized(i, j) = n;
      y(i, j) = n * gain(0, j) + bias(0, j);
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

struct LayerNormGrads {
  DenseMatrix input;
  DenseMatrix gain;
  DenseMatrix bias;
};

inline LayerNormGrads layer_norm_backward(const DenseMatrix& grad_y, const LayerNormCache& cache,
                                          const DenseMatrix& gain) {
  const std::size_t n = grad_y.rows();
  const std::size_t d = grad_y.cols();
  LayerNormGrads g{DenseMatrix(n, d), DenseMatrix(1, d), DenseMatrix(1, d)};
  std::vector<double> gn(d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_gn = 0.0;
    double mean_gn_x = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = cache.normalized(i, j);
      g.gain(0, j) += grad_y(i, j) * xh;
      g.bias(0, j) += grad_y(i, j);
      gn[j] = grad_y(i, j) * gain(0, j);
      mean_gn += gn[j];
      mean_gn_x += gn[j] * xh;
    }
    mean_gn /= static_cast<double>(d);
    mean_gn_x /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      g.input(i, j) =
          cache.inv_std[i] * (gn[j] - mean_gn - cache.normalized(i, j) * mean_gn_x);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Dropout: inverted scaling so inference needs no rescale.

inline DenseMatrix dropout_mask(std::size_t rows, std::size_t cols, double rate, bool training,
                                Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  DenseMatrix mask(rows, cols, 1.0);
  if (!training || rate == 0.0) return mask;
  const double keep = 1.0 - rate;
  std::bernoulli_distribution draw(keep);
  for (double& v : mask.values()) v = draw(rng) ? 1.0 / keep : 0.0;
  return mask;
}

// ---------------------------------------------------------------------------
// Binary cross-entropy on probabilities.

enum class Reduction { sum, mean };

inline constexpr double kProbabilityClamp = 1e-7;

struct LossResult {
  double loss = 0.0;
  DenseMatrix grad;  // d loss / d pred
};

// `row_mask`, when non-empty, selects which rows contribute (1) and which are
// ignored (0); ignored rows receive zero gradient.
inline LossResult bce_loss(const DenseMatrix& pred, const DenseMatrix& target,
                           Reduction reduction = Reduction::sum,
                           std::span<const std::uint8_t> row_mask = {}) {
  if (!pred.same_shape(target)) {
    throw DimensionError("bce_loss: pred " + pred.shape_string() + " vs target " +
                         target.shape_string());
  }
  if (!row_mask.empty() && row_mask.size() != pred.rows()) {
    throw DimensionError("bce_loss: row mask length mismatch");
  }
  LossResult r{0.0, DenseMatrix(pred.rows(), pred.cols())};
  std::size_t counted = 0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    if (!row_mask.empty() && !row_mask[i]) continue;
    for (std::size_t j = 0; j < pred.cols(); ++j) {
      const double raw = pred(i, j);
      const double p = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
      const double y = target(i, j);
      r.loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      const bool clamped = raw < kProbabilityClamp || raw > 1.0 - kProbabilityClamp;
      r.grad(i, j) = clamped ? 0.0 : -y / p + (1.0 - y) / (1.0 - p);
      ++counted;
    }
  }
  if (reduction == Reduction::mean && counted > 0) {
    const double s = 1.0 / static_cast<double>(counted);
    r.loss *= s;
    r.grad *= s;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Trainable tensors and Adam.

struct Param {
  DenseMatrix value;
  DenseMatrix grad;

  Param() = default;
  explicit Param(DenseMatrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = DenseMatrix(value.rows(), value.cols()); }
};

inline void zero_grads(std::span<Param* const> params) {
  for (Param* p : params) p->zero_grad();
}

// Glorot/Xavier uniform.
inline DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  DenseMatrix m(fan_in, fan_out);
  for (double& v : m.values()) v = u(rng);
  return m;
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
  std::uint64_t t = 0;
};

inline void adam_update(std::span<Param* const> params, AdamState& state) {
  if (state.m.empty()) {
    for (const Param* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_update: optimizer state tracks " + std::to_string(state.m.size()) +
                         " params, got " + std::to_string(params.size()));
  }
  ++state.t;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    if (!p.grad.same_shape(p.value) || !state.m[k].same_shape(p.value)) {
      throw DimensionError("adam_update: shape mismatch for param " + std::to_string(k));
    }
    auto val = p.value.values();
    auto g = p.grad.values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    for (std::size_t i = 0; i < val.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      val[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Central finite differences against analytic gradients stored in Param::grad.

struct GradCheckOptions {
  double step = 1e-5;
  // Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t samples_per_param = 0;
  std::uint64_t seed = 0;
  // Denominator floor: error = |a - n| / max(|a|, |n|, floor).
  double floor = 1e-4;
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

inline double finite_difference_check(const std::function<double()>& f,
                                      std::span<Param* const> params,
                                      const GradCheckOptions& opts = {}) {
  Rng rng(opts.seed);
  double worst = 0.0;
  auto eval = [&]() {
    const double v = f();
    if (!std::isfinite(v)) throw NumericError("finite_difference_check: objective is not finite");
    return v;
  };
  for (Param* p : params) {
    auto values = p->value.values();
    std::vector<std::size_t> coords;
    if (opts.samples_per_param == 0 || opts.samples_per_param >= values.size()) {
      coords.resize(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) coords[i] = i;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
      for (std::size_t s = 0; s < opts.samples_per_param; ++s) coords.push_back(pick(rng));
    }
    for (std::size_t i : coords) {
      const double saved = values[i];
      values[i] = saved + opts.step;
      const double up = eval();
      values[i] = saved - opts.step;
      const double down = eval();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      worst = std::max(worst, relative_error(p->grad.values()[i], numeric, opts.floor));
    }
  }
  return worst;
}

}  // namespace msngo
